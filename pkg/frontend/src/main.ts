import 'leaflet/dist/leaflet.css';
import './styles.css';

import { ApiClient } from './api';
import { loadConfig } from './config';
import { MapView } from './map';
import { WalkSession } from './session';
import { AlertSound } from './sound';
import {
  NotificationCard,
  SubmissionDialog,
  readProfileForm,
  setPollCadence,
  setStatus,
  showScreen,
} from './ui';

async function boot(): Promise<void> {
  const config = await loadConfig();
  const api = new ApiClient(config.serverUrl);
  const sound = new AlertSound();

  setPollCadence(config.pollIntervalS);
  showScreen('profile');

  const form = document.getElementById('profile-form') as HTMLFormElement;
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    void startWalk();
  });

  const muteButton = document.getElementById('mute-button') as HTMLButtonElement;
  muteButton.addEventListener('click', () => {
    muteButton.textContent = sound.toggleMute() ? 'Unmute' : 'Mute';
  });

  let session: WalkSession | null = null;
  let map: MapView | null = null;

  const card = new NotificationCard((notification) => {
    map?.centerOn(notification.content.location);
  });

  async function startWalk(): Promise<void> {
    if (!(await api.health())) {
      setStatus('server unreachable; check the config and try again');
      showScreen('profile');
      const banner = document.getElementById('profile-error') as HTMLElement;
      banner.hidden = false;
      banner.textContent = 'Server unreachable. It will be retried when you submit again.';
      return;
    }
    const { profile, environment } = readProfileForm();
    session = new WalkSession(
      api,
      {
        profile,
        environment,
        start: config.start,
        speedMps: config.speedMps,
        pollIntervalS: config.pollIntervalS,
      },
      {
        onNotification(notification) {
          sound.play();
          card.show(notification);
          map?.addContent(notification.content);
          setStatus(`notified: ${notification.content.title}`);
        },
        onMapCenter(center) {
          map?.centerOn(center);
        },
        onSuppressed(suppressed) {
          setStatus(
            'suppressed: ' + suppressed.map((s) => `${s.content_id} (${s.reason})`).join(', '),
          );
        },
        onPosition(position) {
          map?.setWalker(position);
          map?.setWaypoints(session?.walker.waypoints ?? []);
        },
        onStatus(message) {
          setStatus(message);
        },
      },
    );

    try {
      await session.begin();
    } catch (error) {
      const banner = document.getElementById('profile-error') as HTMLElement;
      banner.hidden = false;
      banner.textContent = `Registration failed: ${String(error)}`;
      return;
    }

    showScreen('walk');
    map = new MapView(document.getElementById('map') as HTMLElement, config, (point) => {
      session?.walker.addWaypoint(point);
      map?.setWaypoints(session?.walker.waypoints ?? []);
      setStatus(`walking to ${point.lat.toFixed(5)}, ${point.lon.toFixed(5)}`);
    });
    void api.nearby(config.start.lat, config.start.lon, 2000).then((entries) => {
      map?.setContents(entries.map((entry) => entry.content));
    });

    new SubmissionDialog((kind, submissionForm) => {
      void session
        ?.submitContent(kind, submissionForm)
        .then((contentId) =>
          api.nearby(session!.walker.position.lat, session!.walker.position.lon, 100).then((entries) => {
            const added = entries.find((entry) => entry.content.id === contentId);
            if (added) map?.addContent(added.content);
          }),
        )
        .catch((error) => setStatus(`submission failed: ${String(error)}`));
    });

    document.addEventListener('keydown', (event) => {
      const step = 5;
      if (event.key === 'ArrowUp') session?.walker.nudge(step, 0);
      else if (event.key === 'ArrowDown') session?.walker.nudge(-step, 0);
      else if (event.key === 'ArrowLeft') session?.walker.nudge(0, -step);
      else if (event.key === 'ArrowRight') session?.walker.nudge(0, step);
      else return;
      map?.setWalker(session!.walker.position);
    });

    session.start();
  }
}

void boot();
