/** DOM helpers: profile form wiring, notification card, submission form. */

import { formatDistance } from './geo';
import type { ContentKind, NotificationDto, Profile, Environment } from './types';
import { BARRIER_CLASSES, USEFUL_CLASSES } from './types';
import type { SubmissionForm } from './session';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function selectValue(id: string): string {
  return el<HTMLSelectElement>(id).value;
}

export function readProfileForm(): { profile: Profile; environment: Environment } {
  return {
    profile: {
      locality: selectValue('profile-locality'),
      willingness: selectValue('profile-willingness'),
    },
    environment: {
      weather: selectValue('profile-weather'),
      temperature: selectValue('profile-temperature'),
    },
  };
}

export function showScreen(name: 'profile' | 'walk'): void {
  el('screen-profile').hidden = name !== 'profile';
  el('screen-walk').hidden = name !== 'walk';
}

export function setStatus(message: string): void {
  el('status-line').textContent = message;
}

export function setPollCadence(seconds: number): void {
  el('poll-cadence').textContent = `polling every ${seconds} s`;
}

export class NotificationCard {
  constructor(private readonly onShowMap: (n: NotificationDto) => void) {
    el('card-close').addEventListener('click', () => this.hide());
  }

  show(notification: NotificationDto): void {
    el('card-title').textContent = notification.content.title || notification.content.barrier_class;
    el('card-class').textContent = notification.content.barrier_class.replaceAll('_', ' ');
    el('card-comment').textContent = notification.content.comment;
    el('card-distance').textContent = `${formatDistance(notification.distance)} away`;
    const list = el<HTMLUListElement>('card-reactions');
    list.replaceChildren(
      ...notification.reactions.map(([name, p]) => {
        const item = document.createElement('li');
        item.textContent = `${name} (${Math.round(p * 100)}%)`;
        return item;
      }),
    );
    const mapButton = el<HTMLButtonElement>('card-map-button');
    mapButton.onclick = () => {
      this.onShowMap(notification);
      this.hide();
    };
    el('notification-card').hidden = false;
  }

  hide(): void {
    el('notification-card').hidden = true;
  }
}

export class SubmissionDialog {
  private kind: ContentKind = 'barrier';

  constructor(private readonly onSubmit: (kind: ContentKind, form: SubmissionForm) => void) {
    el('submit-barrier-button').addEventListener('click', () => this.open('barrier'));
    el('submit-useful-button').addEventListener('click', () => this.open('useful'));
    el('submission-cancel').addEventListener('click', () => this.close());
    el<HTMLFormElement>('submission-form').addEventListener('submit', (event) => {
      event.preventDefault();
      this.submit();
    });
  }

  open(kind: ContentKind): void {
    this.kind = kind;
    el('submission-heading').textContent = kind === 'barrier' ? 'Report a barrier' : 'Share a useful spot';
    const classes = kind === 'barrier' ? BARRIER_CLASSES : USEFUL_CLASSES;
    el<HTMLSelectElement>('submission-class').replaceChildren(
      ...classes.map((value) => {
        const option = document.createElement('option');
        option.value = value;
        option.textContent = value.replaceAll('_', ' ');
        return option;
      }),
    );
    el<HTMLInputElement>('submission-title').value = '';
    el<HTMLInputElement>('submission-comment').value = '';
    el<HTMLInputElement>('submission-window').value = '';
    el('submission-dialog').hidden = false;
  }

  close(): void {
    el('submission-dialog').hidden = true;
  }

  private submit(): void {
    const title = el<HTMLInputElement>('submission-title').value.trim();
    if (!title) return;
    const window = parseWindow(el<HTMLInputElement>('submission-window').value);
    this.onSubmit(this.kind, {
      barrierClass: el<HTMLSelectElement>('submission-class').value,
      title,
      comment: el<HTMLInputElement>('submission-comment').value.trim(),
      timeWindow: window,
    });
    this.close();
  }
}

/** "9:00-17:00" (daily) to minutes-from-midnight; empty means always. */
export function parseWindow(text: string): { start: number; end: number } | null {
  const trimmed = text.trim();
  if (!trimmed) return null;
  const match = /^(\d{1,2}):(\d{2})\s*-\s*(\d{1,2}):(\d{2})$/.exec(trimmed);
  if (!match) throw new Error('time window must look like 9:00-17:00');
  const start = Number(match[1]) * 60 + Number(match[2]);
  const end = Number(match[3]) * 60 + Number(match[4]);
  if (!(start < end && end <= 1440)) throw new Error('window must be within one day, start before end');
  return { start, end };
}
