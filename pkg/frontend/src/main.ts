// Browser entry point. Session and service location come from the URL:
//   /ui/?session=human-1            (served by the API itself)
//   /ui/?session=human-1&base=http://127.0.0.1:8750

import { ApiClient } from './api';
import { mountApp } from './app';

const params = new URLSearchParams(window.location.search);
const session = params.get('session');
const base = params.get('base') ?? window.location.origin;

if (!session) {
  document.body.textContent = 'Add ?session=<session-id> to the URL.';
} else {
  const app = mountApp(document, new ApiClient(base, session));
  void app.start();
}
