/**
 * Minimal observable store. The UI is a pure function of this state, and
 * the consent-relevant part of it (`session`) is always a verbatim server
 * response — the wizard never advances on its own.
 */

import type { SessionView } from './api.js';

export type Route = 'session' | 'explorer';

export interface AppState {
  route: Route;
  session: SessionView | null;
  /** transient banner, e.g. "step already answered" after a 409 */
  notice: string | null;
  /** set when a request failed in transit: show a safe retry (re-fetch) */
  retrySessionId: string | null;
}

type Listener = (state: AppState) => void;

const initial: AppState = { route: 'session', session: null, notice: null, retrySessionId: null };

let state: AppState = { ...initial };
const listeners = new Set<Listener>();

export const store = {
  get(): AppState {
    return state;
  },
  set(patch: Partial<AppState>): void {
    state = { ...state, ...patch };
    for (const listener of listeners) listener(state);
  },
  reset(): void {
    state = { ...initial };
    for (const listener of listeners) listener(state);
  },
  subscribe(listener: Listener): () => void {
    listeners.add(listener);
    return () => listeners.delete(listener);
  },
};
