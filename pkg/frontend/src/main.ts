// Entry point: connect to the service, open (or create) a model, mount the
// editor. The service base URL comes from ?api=… or defaults to the
// service's standard bind address.

import { ApiClient } from './api.js';
import { createApp } from './app.js';
import { EditorState } from './state.js';

async function boot(): Promise<void> {
  const root = document.getElementById('app');
  if (!root) return;
  const params = new URLSearchParams(window.location.search);
  const base = params.get('api') ?? 'http://127.0.0.1:7421';
  const api = new ApiClient(base);
  const state = new EditorState(api);

  const wanted = params.get('model');
  const listing = await api.listModels();
  if (wanted) {
    await state.open(wanted);
  } else if (listing.models.length > 0) {
    await state.open(listing.models[0].id);
  } else {
    await state.createModel('reference_model', 'Untitled model');
  }
  createApp(root, state);
  if (state.doc && state.doc.nodes.length > 0) {
    await state.autoLayout(true);
  }
}

void boot().catch((err) => {
  const root = document.getElementById('app');
  if (root) {
    root.textContent = `Could not start: ${err instanceof Error ? err.message : String(err)}`;
  }
});
