/**
 * Credentials & dataset entry: the author identifies themselves at both
 * sources and supplies the two normalized dataset documents; submitting
 * opens a consent session at the node.
 */

import { ApiError, openSession } from './api.js';
import { store } from './store.js';

// Prefilled working example so the flow can be explored immediately.
const EXAMPLE_SCOPUS = {
  schema: 'por.bib.v1',
  source: 'SCOPUS',
  publications: [
    { doi: '10.1000/a', title: 'Alpha', year: 2019, author_ids: ['57200000001'] },
    { doi: '10.1000/b', title: 'Beta', year: 2020, author_ids: ['57200000001'] },
    { title: 'Gamma (no DOI)', year: 2021, author_ids: ['57200000001'] },
  ],
  citations: [
    { cited_doi: '10.1000/a', citing_doi: '10.2000/c1', citing_author_ids: ['57200000001'], retracted: false },
    { cited_doi: '10.1000/a', citing_doi: '10.2000/c3', citing_author_ids: ['99'], retracted: false },
    { cited_doi: '10.1000/b', citing_doi: '10.2000/c4', citing_author_ids: ['88'], retracted: false },
  ],
};

const EXAMPLE_WOS = {
  schema: 'por.bib.v1',
  source: 'WOS',
  publications: [
    { doi: '10.1000/a', title: 'Alpha', year: 2019, author_ids: ['A-1234-2019'] },
    { doi: '10.1000/c', title: 'Ceta', year: 2021, author_ids: ['A-1234-2019'] },
  ],
  citations: [
    { cited_doi: '10.1000/a', citing_doi: '10.2000/c2', citing_author_ids: [], retracted: true },
    { cited_doi: '10.1000/b', citing_doi: '10.2000/c5', citing_author_ids: [], retracted: false },
    { cited_doi: '10.1000/a', citing_author_ids: [], retracted: false },
    { cited_doi: '10.1000/d', citing_doi: '10.2000/c6', citing_author_ids: [], retracted: false },
    { cited_doi: '10.1000/b', citing_doi: '10.2000/c5', citing_author_ids: [], retracted: false },
  ],
};

function field(labelText: string, id: string, value: string): HTMLElement {
  const wrap = document.createElement('label');
  wrap.className = 'field';
  const span = document.createElement('span');
  span.textContent = labelText;
  const input = document.createElement('input');
  input.id = id;
  input.value = value;
  wrap.append(span, input);
  return wrap;
}

function datasetBox(labelText: string, id: string, value: unknown): HTMLElement {
  const wrap = document.createElement('label');
  wrap.className = 'field';
  const span = document.createElement('span');
  span.textContent = labelText;
  const area = document.createElement('textarea');
  area.id = id;
  area.rows = 6;
  area.value = JSON.stringify(value, null, 2);
  wrap.append(span, area);
  return wrap;
}

export function renderCredentials(root: HTMLElement): void {
  const form = document.createElement('form');
  form.id = 'credentials';
  const heading = document.createElement('h2');
  heading.textContent = 'Your identities and datasets';
  form.appendChild(heading);

  form.appendChild(field('Scopus AuthorID', 'scopus-id', '57200000001'));
  form.appendChild(field('Web of Science ResearcherID', 'wos-id', 'A-1234-2019'));
  form.appendChild(field('Display name', 'display-name', 'A. Example'));
  form.appendChild(datasetBox('Scopus dataset (por.bib.v1)', 'scopus-dataset', EXAMPLE_SCOPUS));
  form.appendChild(datasetBox('Web of Science dataset (por.bib.v1)', 'wos-dataset', EXAMPLE_WOS));

  const submit = document.createElement('button');
  submit.type = 'submit';
  submit.id = 'open-session';
  submit.textContent = 'Build my unified record';
  form.appendChild(submit);

  const errorOut = document.createElement('p');
  errorOut.className = 'error';
  errorOut.id = 'credentials-error';
  form.appendChild(errorOut);

  form.addEventListener('submit', async (event) => {
    event.preventDefault();
    errorOut.textContent = '';
    const value = (id: string) => (form.querySelector(`#${id}`) as HTMLInputElement).value;
    let scopus: unknown;
    let wos: unknown;
    try {
      scopus = JSON.parse((form.querySelector('#scopus-dataset') as HTMLTextAreaElement).value);
      wos = JSON.parse((form.querySelector('#wos-dataset') as HTMLTextAreaElement).value);
    } catch {
      errorOut.textContent = 'Datasets must be valid JSON documents.';
      return;
    }
    try {
      const view = await openSession({
        author: {
          scopus_id: value('scopus-id'),
          wos_id: value('wos-id'),
          display_name: value('display-name'),
        },
        scopus,
        wos,
      });
      store.set({ session: view, notice: null, retrySessionId: null });
    } catch (error) {
      errorOut.textContent =
        error instanceof ApiError ? error.message : 'The node did not answer. Check it is running.';
    }
  });

  root.appendChild(form);
}
