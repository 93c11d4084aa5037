import { StudioApi } from './api.js';
import { StudioState } from './state.js';

export interface PreviewOptions {
    previewMaxSide?: number;
    previewBlockSize?: number;
    fullBlockSize?: number;
    pollIntervalMs?: number;
}

interface PreparedSource {
    of: Blob;
    blob: Blob;
    name: string;
}

// Render preview pane. Preview requests go out at a capped source
// resolution with a small block size for quick turnaround; the full
// quality button submits the original picture at the production block
// size. At most one render request is in flight at a time: refreshes
// that arrive while one is running coalesce into a single trailing
// request, and responses that lost the race against a newer request are
// thrown away using the state's render-generation counter.
export class PreviewPane {
    readonly element: HTMLElement;
    lastRenderBlob: Blob | null = null;

    private api: StudioApi;
    private state: StudioState;
    private image: HTMLImageElement;
    private statusLine: HTMLElement;
    private previewMaxSide: number;
    private previewBlockSize: number;
    private fullBlockSize: number;
    private pollIntervalMs: number;

    private inFlight = false;
    private queued = false;
    private nextQuality: 'preview' | 'full' = 'preview';
    private prepared: PreparedSource | null = null;
    private objectUrl: string | null = null;

    constructor(api: StudioApi, state: StudioState, options?: PreviewOptions) {
        this.api = api;
        this.state = state;
        this.previewMaxSide = options?.previewMaxSide ?? 256;
        this.previewBlockSize = options?.previewBlockSize ?? 4;
        this.fullBlockSize = options?.fullBlockSize ?? 8;
        this.pollIntervalMs = options?.pollIntervalMs ?? 250;

        this.element = document.createElement('div');
        this.element.className = 'preview-pane';
        this.image = document.createElement('img');
        this.image.className = 'preview-image';
        this.image.alt = 'sand render preview';
        this.statusLine = document.createElement('div');
        this.statusLine.className = 'preview-status';
        this.statusLine.textContent = 'upload sands, build a plan and pick a picture to preview';
        this.element.appendChild(this.image);
        this.element.appendChild(this.statusLine);
    }

    get status(): string {
        return this.statusLine.textContent ?? '';
    }

    sourceChanged(): void {
        this.prepared = null;
    }

    async refresh(): Promise<void> {
        this.nextQuality = 'preview';
        await this.kick();
    }

    async renderFull(): Promise<void> {
        this.nextQuality = 'full';
        await this.kick();
    }

    private async kick(): Promise<void> {
        if (!this.state.hasPlan || !this.state.hasSource) {
            this.statusLine.textContent = 'upload sands, build a plan and pick a picture to preview';
            return;
        }
        // Invalidate whatever is in flight; its response is now stale.
        this.state.nextRenderGeneration();
        if (this.inFlight) {
            this.queued = true;
            return;
        }
        this.inFlight = true;
        try {
            do {
                this.queued = false;
                await this.runOnce(this.nextQuality);
            } while (this.queued);
        } finally {
            this.inFlight = false;
        }
    }

    private async runOnce(quality: 'preview' | 'full'): Promise<void> {
        const generation = this.state.nextRenderGeneration();
        const label = quality === 'full' ? 'full quality render' : 'preview';
        this.statusLine.textContent = `rendering ${label}...`;
        try {
            const source = quality === 'full'
                ? { blob: this.state.sourceBlob as Blob, name: this.state.sourceName }
                : await this.preparePreviewSource();
            const blockSize = quality === 'full' ? this.fullBlockSize : this.previewBlockSize;
            const ticket = await this.api.requestRender(
                this.state.sessionId, source.blob, source.name, blockSize);
            let blob: Blob;
            if (ticket.status === 'done') {
                const fetched = await this.api.fetchRender(ticket.render_id);
                if (fetched === null) {
                    throw new Error('render reported done but is still pending');
                }
                blob = fetched;
            } else {
                blob = await this.api.waitForRender(ticket.render_id, {
                    intervalMs: this.pollIntervalMs,
                });
            }
            if (!this.state.isCurrentGeneration(generation)) {
                return;
            }
            this.applyBlob(blob);
            this.state.markPreviewFresh();
            this.statusLine.textContent = `${label} up to date`;
        } catch (err) {
            if (!this.state.isCurrentGeneration(generation)) {
                return;
            }
            const message = err instanceof Error ? err.message : String(err);
            this.statusLine.textContent = `render failed: ${message}`;
        }
    }

    // Downscales the chosen picture so its long side stays within the
    // preview cap. Environments without canvas decoding fall back to the
    // original bytes; the service result is identical, just slower.
    private async preparePreviewSource(): Promise<{ blob: Blob; name: string }> {
        const source = this.state.sourceBlob;
        if (source === null) {
            throw new Error('no source picture chosen');
        }
        if (this.prepared !== null && this.prepared.of === source) {
            return { blob: this.prepared.blob, name: this.prepared.name };
        }
        let blob = source;
        let name = this.state.sourceName;
        try {
            const bitmap = await createImageBitmap(source);
            const longSide = Math.max(bitmap.width, bitmap.height);
            if (longSide > this.previewMaxSide) {
                const scale = this.previewMaxSide / longSide;
                const width = Math.max(1, Math.round(bitmap.width * scale));
                const height = Math.max(1, Math.round(bitmap.height * scale));
                const canvas = document.createElement('canvas');
                canvas.width = width;
                canvas.height = height;
                const context = canvas.getContext('2d');
                if (context !== null) {
                    context.drawImage(bitmap, 0, 0, width, height);
                    const scaled = await new Promise<Blob | null>((resolve) => {
                        canvas.toBlob((b) => resolve(b), 'image/png');
                    });
                    if (scaled !== null) {
                        blob = scaled;
                        name = 'preview.png';
                    }
                }
            }
        } catch {
            // keep the original bytes
        }
        this.prepared = { of: source, blob, name };
        return { blob, name };
    }

    private applyBlob(blob: Blob): void {
        this.lastRenderBlob = blob;
        if (typeof URL.createObjectURL === 'function') {
            const url = URL.createObjectURL(blob);
            if (this.objectUrl !== null && typeof URL.revokeObjectURL === 'function') {
                URL.revokeObjectURL(this.objectUrl);
            }
            this.objectUrl = url;
            this.image.src = url;
        }
        this.image.dataset.renderBytes = String(blob.size);
    }
}
