/**
 * A walking session: one registered profile, a walker moving along
 * clicked waypoints, and the poll loop sending fixes to the server.
 *
 * All selection logic is server-side; the session only reports positions
 * and surfaces what comes back. Overlapping polls are skipped (a new
 * tick while the previous request is in flight does nothing), and a
 * failed poll is logged to the status callback and retried next tick.
 */

import type { ApiClient } from './api';
import { Walker } from './walker';
import type {
  ContentKind,
  Environment,
  FixResponse,
  GeoPointDto,
  NotificationDto,
  Profile,
  SuppressionDto,
  TimeWindowDto,
} from './types';

export interface SessionCallbacks {
  onNotification?(notification: NotificationDto): void;
  onMapCenter?(center: GeoPointDto): void;
  onSuppressed?(suppressed: SuppressionDto[]): void;
  onPosition?(position: GeoPointDto, heading: number | null): void;
  onStatus?(message: string): void;
}

export interface SessionOptions {
  profile: Profile;
  environment: Environment;
  start: GeoPointDto;
  speedMps: number;
  pollIntervalS: number;
  /** Clock in epoch seconds; injectable for tests. */
  now?: () => number;
}

export interface SubmissionForm {
  barrierClass: string;
  title: string;
  comment?: string;
  tags?: string[];
  timeWindow?: TimeWindowDto | null;
}

export class WalkSession {
  readonly walker: Walker;
  userId: string | null = null;
  environment: Environment;

  private readonly now: () => number;
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;
  private lastTickAt: number | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly options: SessionOptions,
    private readonly callbacks: SessionCallbacks = {},
  ) {
    this.walker = new Walker(options.start, options.speedMps);
    this.environment = { ...options.environment };
    this.now = options.now ?? (() => Date.now() / 1000);
  }

  /** Register the profile; must succeed before polling starts. */
  async begin(): Promise<string> {
    this.userId = await this.api.createUser(this.options.profile);
    this.callbacks.onStatus?.(`session ready (${this.userId})`);
    return this.userId;
  }

  get active(): boolean {
    return this.timer !== null;
  }

  start(): void {
    if (this.timer !== null) return;
    if (this.userId === null) throw new Error('begin() must resolve before start()');
    this.timer = setInterval(() => void this.pollOnce(), this.options.pollIntervalS * 1000);
    void this.pollOnce();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.lastTickAt = null;
  }

  /**
   * One poll: advance the walker by the elapsed time, send the fix, and
   * dispatch whatever the server decided. Returns null when skipped
   * (overlap) or failed (logged; next tick retries).
   */
  async pollOnce(at?: number): Promise<FixResponse | null> {
    if (this.userId === null) throw new Error('session not registered');
    if (this.inFlight) {
      this.callbacks.onStatus?.('poll skipped: previous still in flight');
      return null;
    }
    const ts = at ?? this.now();
    const dt = this.lastTickAt === null ? 0 : Math.max(ts - this.lastTickAt, 0);
    this.lastTickAt = ts;
    this.walker.advance(dt);

    this.inFlight = true;
    try {
      const response = await this.api.postFix(this.userId, {
        lat: this.walker.position.lat,
        lon: this.walker.position.lon,
        ts,
        weather: this.environment.weather,
        temperature: this.environment.temperature,
      });
      this.callbacks.onPosition?.(this.walker.position, response.heading);
      if (response.suppressed.length > 0) {
        this.callbacks.onSuppressed?.(response.suppressed);
      }
      if (response.notification !== null) {
        this.callbacks.onNotification?.(response.notification);
      } else if (response.map_center) {
        this.callbacks.onMapCenter?.(response.map_center);
      }
      return response;
    } catch (error) {
      this.callbacks.onStatus?.(`poll failed, retrying next tick: ${String(error)}`);
      return null;
    } finally {
      this.inFlight = false;
    }
  }

  /** Cross button (barrier) or circle button (useful) submission at the
   *  walker's current position. */
  async submitContent(kind: ContentKind, form: SubmissionForm): Promise<string> {
    if (this.userId === null) throw new Error('session not registered');
    const contentId = await this.api.submitContent({
      kind,
      category: kind === 'barrier' ? 'dynamic' : 'static',
      barrier_class: form.barrierClass,
      title: form.title,
      comment: form.comment ?? '',
      tags: form.tags ?? [],
      time_window: form.timeWindow ?? null,
      location: { ...this.walker.position },
      submitter: this.userId,
    });
    this.callbacks.onStatus?.(`submitted ${kind} ${contentId}`);
    return contentId;
  }
}
