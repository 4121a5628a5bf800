/** Typed client for the notification server; the only network surface. */

import type {
  ContentSubmission,
  FixResponse,
  NearbyEntry,
  Profile,
} from './types';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

interface FixBody {
  lat: number;
  lon: number;
  ts: number;
  weather: string;
  temperature: string;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = 'http_error';
      let message = `${response.status}`;
      try {
        const payload = (await response.json()) as { code?: string; message?: string };
        code = payload.code ?? code;
        message = payload.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  async health(): Promise<boolean> {
    try {
      const body = await this.request<{ status: string }>('GET', '/health');
      return body.status === 'ok';
    } catch {
      return false;
    }
  }

  async createUser(profile: Profile): Promise<string> {
    const body = await this.request<{ user_id: string }>('POST', '/users', profile);
    return body.user_id;
  }

  postFix(userId: string, fix: FixBody): Promise<FixResponse> {
    return this.request<FixResponse>('POST', `/users/${encodeURIComponent(userId)}/fix`, fix);
  }

  async submitContent(submission: ContentSubmission): Promise<string> {
    const body = await this.request<{ content_id: string }>('POST', '/contents', submission);
    return body.content_id;
  }

  async nearby(lat: number, lon: number, r: number): Promise<NearbyEntry[]> {
    const query = `lat=${encodeURIComponent(lat)}&lon=${encodeURIComponent(lon)}&r=${encodeURIComponent(r)}`;
    const body = await this.request<{ contents: NearbyEntry[] }>('GET', `/contents/near?${query}`);
    return body.contents;
  }
}
