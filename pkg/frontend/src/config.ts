/** Static client configuration, loaded once from config.json. */

import type { GeoPointDto } from './types';

export interface ClientConfig {
  /** Server base URL; empty string means same origin. */
  serverUrl: string;
  /** Raster tile URL template with {z}/{x}/{y} placeholders. */
  tileUrl: string;
  tileAttribution: string;
  /** Accelerated poll interval in seconds (the deployed cadence of 150 s
   *  is unusable for a demo); shown on screen. */
  pollIntervalS: number;
  /** Walking speed in m/s. */
  speedMps: number;
  start: GeoPointDto;
}

export const DEFAULT_CONFIG: ClientConfig = {
  serverUrl: '',
  tileUrl: 'https://tile.openstreetmap.org/{z}/{x}/{y}.png',
  tileAttribution: '&copy; OpenStreetMap contributors',
  pollIntervalS: 5,
  speedMps: 1.1,
  start: { lat: 35.7148, lon: 139.7737 },
};

export async function loadConfig(fetchFn: typeof fetch = (...args) => fetch(...args)): Promise<ClientConfig> {
  try {
    const response = await fetchFn('config.json');
    if (!response.ok) return { ...DEFAULT_CONFIG };
    const overrides = (await response.json()) as Partial<ClientConfig>;
    return { ...DEFAULT_CONFIG, ...overrides };
  } catch {
    return { ...DEFAULT_CONFIG };
  }
}
