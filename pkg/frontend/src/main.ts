import { StudioApi } from './api.js';
import { mountStudio } from './app.js';

// Boot against ?api=<base url>, defaulting to a local service on the
// standard port.
const root = document.getElementById('studio-root');
if (root !== null) {
    const params = new URLSearchParams(window.location.search);
    const base = params.get('api')
        ?? `${window.location.protocol}//${window.location.hostname || 'localhost'}:8000`;
    const app = mountStudio(root, new StudioApi(base));
    app.start().catch((err) => {
        const note = document.createElement('p');
        note.className = 'boot-error';
        note.textContent = `could not reach the sandtone service at ${base}: ${err}`;
        root.appendChild(note);
    });
}
