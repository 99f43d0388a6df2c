/**
 * Application shell: two routes (consent session, chain explorer) over the
 * observable store. Rendering is a pure function of state; every state
 * change repaints.
 */

import { renderCredentials } from './credentials.js';
import { renderExplorer } from './explorer.js';
import { store } from './store.js';
import { renderWizard } from './wizard.js';

function renderNav(root: HTMLElement): void {
  const nav = document.createElement('nav');
  nav.className = 'top-nav';
  const title = document.createElement('span');
  title.className = 'brand';
  title.textContent = 'por-ledger';
  nav.appendChild(title);
  const routes: Array<['session' | 'explorer', string, string]> = [
    ['session', 'nav-session', 'Consent session'],
    ['explorer', 'nav-explorer-tab', 'Chain explorer'],
  ];
  for (const [route, id, label] of routes) {
    const button = document.createElement('button');
    button.id = id;
    button.textContent = label;
    if (store.get().route === route) button.classList.add('active');
    button.addEventListener('click', () => store.set({ route }));
    nav.appendChild(button);
  }
  root.appendChild(nav);
}

function render(root: HTMLElement): void {
  root.innerHTML = '';
  renderNav(root);
  const main = document.createElement('main');
  main.id = 'main';
  root.appendChild(main);

  const state = store.get();
  if (state.route === 'explorer') {
    void renderExplorer(main);
    return;
  }
  if (state.session) {
    renderWizard(main, state.session);
  } else {
    renderCredentials(main);
  }
}

/** Mount the app; returns an unmount function (used by tests). */
export function mount(root: HTMLElement): () => void {
  const unsubscribe = store.subscribe(() => render(root));
  render(root);
  return () => {
    unsubscribe();
    root.innerHTML = '';
  };
}
