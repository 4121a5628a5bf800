/** Desk-walker kinematics: a position advancing along clicked waypoints. */

import { haversineMeters, offsetMeters } from './geo';
import type { GeoPointDto } from './types';

export class Walker {
  position: GeoPointDto;
  private queue: GeoPointDto[] = [];

  constructor(start: GeoPointDto, readonly speedMps: number) {
    this.position = { ...start };
  }

  get waypoints(): GeoPointDto[] {
    return [...this.queue];
  }

  get walking(): boolean {
    return this.queue.length > 0;
  }

  addWaypoint(point: GeoPointDto): void {
    this.queue.push({ ...point });
  }

  clearWaypoints(): void {
    this.queue = [];
  }

  /** Arrow-key style step; does not disturb the waypoint queue. */
  nudge(northM: number, eastM: number): void {
    this.position = offsetMeters(this.position, northM, eastM);
  }

  /**
   * Walk for dtSeconds along the waypoint queue, consuming reached
   * waypoints. Returns the distance actually covered in meters.
   */
  advance(dtSeconds: number): number {
    let budget = Math.max(dtSeconds, 0) * this.speedMps;
    let moved = 0;
    let target: GeoPointDto | undefined;
    while (budget > 0 && (target = this.queue[0]) !== undefined) {
      const leg = haversineMeters(this.position, target);
      if (leg <= budget) {
        this.position = { ...target };
        this.queue.shift();
        budget -= leg;
        moved += leg;
      } else {
        const f = budget / leg;
        this.position = {
          lat: this.position.lat + (target.lat - this.position.lat) * f,
          lon: this.position.lon + (target.lon - this.position.lon) * f,
        };
        moved += budget;
        budget = 0;
      }
    }
    return moved;
  }
}
