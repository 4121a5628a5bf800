/** Wire types mirroring the server API (see docs/api.md in the repo root). */

export interface GeoPointDto {
  lat: number;
  lon: number;
}

export interface TimeWindowDto {
  start: number;
  end: number;
}

export type ContentKind = 'barrier' | 'useful';

export interface ContentDto {
  id: string;
  kind: ContentKind;
  category: 'static' | 'dynamic';
  barrier_class: string;
  title: string;
  comment: string;
  tags: string[];
  photo_ref: string;
  time_window: TimeWindowDto | null;
  location: GeoPointDto;
  submitter: string;
  created_at: number;
}

export interface NotificationDto {
  content: ContentDto;
  distance: number;
  bearing: number;
  importance: number;
  reactions: [string, number][];
  neglect_probability: number;
}

export interface SuppressionDto {
  content_id: string;
  reason: string;
}

export interface FixResponse {
  notification: NotificationDto | null;
  map_center?: GeoPointDto;
  heading: number | null;
  speed: number;
  suppressed: SuppressionDto[];
}

export interface Profile {
  locality: string;
  willingness: string;
  purpose?: string;
  walk_ability?: string;
}

export interface Environment {
  weather: string;
  temperature: string;
}

export interface ContentSubmission {
  kind: ContentKind;
  category: 'static' | 'dynamic';
  barrier_class: string;
  title: string;
  comment?: string;
  tags?: string[];
  time_window?: TimeWindowDto | null;
  location: GeoPointDto;
  submitter?: string;
}

export interface NearbyEntry {
  content: ContentDto;
  distance: number;
}

/** Selector vocabularies (kept in sync with the server's vocab module). */
export const WEATHER_STATES = ['Fine', 'Cloudy', 'Rain'] as const;
export const TEMPERATURE_STATES = ['30C+', '5C-', 'other'] as const;
export const LOCALITY_STATES = ['Yes', 'No', 'Little'] as const;
export const WILLINGNESS_STATES = ['walk for exercise', 'not walk', 'other'] as const;

export const BARRIER_CLASSES = [
  'stairs_in_station',
  'pedestrian_bridge',
  'bicycles_on_sidewalk',
  'bicycles_on_street',
  'road_without_sidewalk',
  'crowd_in_station',
  'street_people',
  'road_construction',
  'road_under_sun',
  'steep_stairs',
  'no_resting_place',
  'hawkers',
  'children_in_public_space',
  'space_without_people_night',
  'other',
] as const;

export const USEFUL_CLASSES = [
  'police_box',
  'bench_in_shade',
  'park_map',
  'toilet',
  'resting_place',
  'restaurant',
  'vending_machine',
  'other',
] as const;
