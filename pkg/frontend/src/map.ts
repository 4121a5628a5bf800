/** Leaflet glue: tiles, walker marker, content markers, waypoint clicks. */

import * as L from 'leaflet';

import type { ClientConfig } from './config';
import type { ContentDto, GeoPointDto } from './types';

function toLatLng(p: GeoPointDto): L.LatLngExpression {
  return [p.lat, p.lon];
}

export class MapView {
  private readonly map: L.Map;
  private readonly walkerMarker: L.Marker;
  private readonly contentLayer: L.LayerGroup;
  private readonly waypointLayer: L.LayerGroup;
  private readonly contentMarkers = new Map<string, L.Marker>();

  constructor(
    element: HTMLElement,
    config: ClientConfig,
    onMapClick: (point: GeoPointDto) => void,
  ) {
    this.map = L.map(element, { zoomControl: true }).setView(toLatLng(config.start), 17);
    L.tileLayer(config.tileUrl, { attribution: config.tileAttribution, maxZoom: 19 }).addTo(this.map);
    this.contentLayer = L.layerGroup().addTo(this.map);
    this.waypointLayer = L.layerGroup().addTo(this.map);
    this.walkerMarker = L.marker(toLatLng(config.start), {
      icon: L.divIcon({ className: 'walker-icon', html: '🚶', iconSize: [36, 36], iconAnchor: [18, 18] }),
      keyboard: false,
      zIndexOffset: 1000,
    }).addTo(this.map);
    this.map.on('click', (event: L.LeafletMouseEvent) => {
      onMapClick({ lat: event.latlng.lat, lon: event.latlng.lng });
    });
  }

  setWalker(position: GeoPointDto): void {
    this.walkerMarker.setLatLng(toLatLng(position));
  }

  centerOn(point: GeoPointDto): void {
    this.map.panTo(toLatLng(point));
  }

  addContent(content: ContentDto): void {
    if (this.contentMarkers.has(content.id)) return;
    const isBarrier = content.kind === 'barrier';
    const marker = L.marker(toLatLng(content.location), {
      icon: L.divIcon({
        className: isBarrier ? 'content-icon barrier' : 'content-icon useful',
        html: isBarrier ? '✕' : '●',
        iconSize: [30, 30],
        iconAnchor: [15, 15],
      }),
      keyboard: false,
    }).bindTooltip(`${content.title} (${content.barrier_class})`);
    marker.addTo(this.contentLayer);
    this.contentMarkers.set(content.id, marker);
  }

  setContents(contents: ContentDto[]): void {
    for (const content of contents) this.addContent(content);
  }

  setWaypoints(points: GeoPointDto[]): void {
    this.waypointLayer.clearLayers();
    for (const point of points) {
      L.circleMarker(toLatLng(point), {
        radius: 7,
        color: '#ffb000',
        fillColor: '#ffb000',
        fillOpacity: 0.9,
      }).addTo(this.waypointLayer);
    }
  }
}
