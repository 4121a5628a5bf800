/** Small geodesy helpers for display and walker movement. */

import type { GeoPointDto } from './types';

const EARTH_RADIUS_M = 6371000;
const DEG_PER_M_LAT = 180 / (Math.PI * EARTH_RADIUS_M);

export function haversineMeters(a: GeoPointDto, b: GeoPointDto): number {
  const phi1 = (a.lat * Math.PI) / 180;
  const phi2 = (b.lat * Math.PI) / 180;
  const dPhi = ((b.lat - a.lat) * Math.PI) / 180;
  const dLam = ((b.lon - a.lon) * Math.PI) / 180;
  const h =
    Math.sin(dPhi / 2) ** 2 + Math.cos(phi1) * Math.cos(phi2) * Math.sin(dLam / 2) ** 2;
  return 2 * EARTH_RADIUS_M * Math.atan2(Math.sqrt(h), Math.sqrt(1 - h));
}

/** Move roughly northM/eastM meters (flat-earth step, fine at walking scale). */
export function offsetMeters(origin: GeoPointDto, northM: number, eastM: number): GeoPointDto {
  const lat = origin.lat + northM * DEG_PER_M_LAT;
  const lon = origin.lon + (eastM * DEG_PER_M_LAT) / Math.cos((origin.lat * Math.PI) / 180);
  return { lat, lon };
}

export function formatDistance(meters: number): string {
  return meters < 1000 ? `${Math.round(meters)} m` : `${(meters / 1000).toFixed(1)} km`;
}
