import { ApiError, StudioApi } from './api.js';
import { BoundaryHandles, HandleMetrics } from './handles.js';
import { downscalePixels, grayHistogram, HistogramView } from './histogram.js';
import { PreviewPane } from './preview.js';
import { StudioState } from './state.js';

export interface StudioOptions {
    settleMs?: number;
    handleMetrics?: () => HandleMetrics;
    previewMaxSide?: number;
    previewBlockSize?: number;
    fullBlockSize?: number;
    pollIntervalMs?: number;
    toastMs?: number;
    defaultSetSize?: number;
}

interface UploadFailure {
    name: string;
    message: string;
}

function errorMessage(err: unknown): string {
    if (err instanceof ApiError) {
        return `${err.message} (${err.code})`;
    }
    return err instanceof Error ? err.message : String(err);
}

// The studio binds the service session to the page: sand cards on the
// left, the mixture strip across the top, then histogram plus handles,
// the render preview, and the recipe export. All artifacts are fetched
// from the service; the page only decides when to ask for them.
export class StudioApp {
    readonly root: HTMLElement;
    readonly api: StudioApi;
    readonly state: StudioState;
    readonly preview: PreviewPane;
    handles: BoundaryHandles | null = null;

    private options: StudioOptions;
    private uploadFailures: UploadFailure[] = [];
    private sandBlobs = new Map<string, Blob>();
    private swatchVersion = 0;

    private sessionLabel!: HTMLElement;
    private sandInput!: HTMLInputElement;
    private cardList!: HTMLElement;
    private uploadErrorList!: HTMLElement;
    private setSizeInput!: HTMLInputElement;
    private buildPlanButton!: HTMLButtonElement;
    private planBadge!: HTMLElement;
    private swatchStrip!: HTMLElement;
    private swatchBadge!: HTMLElement;
    private sourceInput!: HTMLInputElement;
    private histogramView!: HistogramView;
    private handleOverlay!: HTMLElement;
    private previewBadge!: HTMLElement;
    private fullRenderButton!: HTMLButtonElement;
    private exportButton!: HTMLButtonElement;
    private toastArea!: HTMLElement;

    constructor(root: HTMLElement, api: StudioApi, options: StudioOptions = {}) {
        this.root = root;
        this.api = api;
        this.options = options;
        this.state = new StudioState();
        this.preview = new PreviewPane(api, this.state, {
            previewMaxSide: options.previewMaxSide,
            previewBlockSize: options.previewBlockSize,
            fullBlockSize: options.fullBlockSize,
            pollIntervalMs: options.pollIntervalMs,
        });
        this.buildLayout();
    }

    async start(seed?: number): Promise<void> {
        const view = await this.api.createSession(seed);
        this.state.setSession(view);
        this.sessionLabel.textContent = `session ${view.id} (seed ${view.seed})`;
        this.renderAll();
    }

    // ---- sand uploads ----

    async addSandFiles(files: { blob: Blob; name: string }[]): Promise<void> {
        this.uploadFailures = [];
        for (const file of files) {
            try {
                const result = await this.api.uploadSand(this.state.sessionId, file.blob, file.name);
                this.sandBlobs.set(result.sand_id, file.blob);
            } catch (err) {
                this.uploadFailures.push({ name: file.name, message: errorMessage(err) });
            }
        }
        const view = await this.api.getSession(this.state.sessionId);
        const hadPlan = this.state.hasPlan;
        this.state.setSession(view);
        this.state.markSandsChanged();
        if (hadPlan && !view.has_plan) {
            this.disableHandles();
        }
        this.renderAll();
    }

    async deleteSand(sandId: string): Promise<void> {
        try {
            await this.api.deleteSand(this.state.sessionId, sandId);
        } catch (err) {
            this.toast(errorMessage(err));
            return;
        }
        this.sandBlobs.delete(sandId);
        const view = await this.api.getSession(this.state.sessionId);
        this.state.setSession(view);
        this.state.markSandsChanged();
        if (!view.has_plan) {
            this.disableHandles();
        }
        this.renderAll();
    }

    // ---- plan ----

    async buildPlan(): Promise<void> {
        const setSize = Number(this.setSizeInput.value) || (this.options.defaultSetSize ?? 16);
        try {
            const plan = await this.api.buildPlan(this.state.sessionId, setSize);
            const view = await this.api.getSession(this.state.sessionId);
            this.state.setSession(view);
            this.state.setPlan(plan, view.table ?? []);
            this.swatchVersion += 1;
            this.installHandles();
            this.renderAll();
            this.state.markSwatchesFresh();
            this.renderBadges();
            await this.preview.refresh();
        } catch (err) {
            this.toast(`plan failed: ${errorMessage(err)}`);
        }
    }

    // ---- source picture ----

    async setSourceBlob(blob: Blob, name: string): Promise<void> {
        this.state.sourceBlob = blob;
        this.state.sourceName = name;
        this.state.markSourceChanged();
        this.preview.sourceChanged();
        await this.updateHistogram(blob);
        this.renderBadges();
        await this.preview.refresh();
    }

    // ---- boundary drags ----

    private async commitBoundary(index: number, value: number): Promise<void> {
        let thresholds: number[];
        try {
            thresholds = await this.api.patchBoundary(this.state.sessionId, index, value);
        } catch (err) {
            this.handles?.snapBack(index);
            if (err instanceof ApiError && err.status === 422) {
                this.toast(`threshold collision, handle ${index} snapped back`);
            } else {
                this.toast(`boundary update failed: ${errorMessage(err)}`);
            }
            return;
        }
        this.state.setThresholds(thresholds);
        this.handles?.applyThresholds(thresholds);
        this.renderBadges();
        await this.preview.refresh();
    }

    // ---- recipe ----

    async exportRecipe(): Promise<string> {
        const text = await this.api.fetchRecipe(this.state.sessionId);
        if (typeof URL.createObjectURL === 'function') {
            const blob = new Blob([text], { type: 'text/csv' });
            const url = URL.createObjectURL(blob);
            const anchor = document.createElement('a');
            anchor.href = url;
            anchor.download = 'recipe.csv';
            anchor.click();
            if (typeof URL.revokeObjectURL === 'function') {
                URL.revokeObjectURL(url);
            }
        }
        return text;
    }

    toast(message: string): void {
        const note = document.createElement('div');
        note.className = 'toast';
        note.textContent = message;
        this.toastArea.appendChild(note);
        setTimeout(() => note.remove(), this.options.toastMs ?? 4000);
    }

    // ---- layout ----

    private buildLayout(): void {
        this.root.replaceChildren();
        this.root.classList.add('studio');

        const header = document.createElement('header');
        header.className = 'studio-header';
        const title = document.createElement('h1');
        title.textContent = 'Sandtone Studio';
        this.sessionLabel = document.createElement('span');
        this.sessionLabel.className = 'session-label';
        header.appendChild(title);
        header.appendChild(this.sessionLabel);
        this.root.appendChild(header);

        this.toastArea = document.createElement('div');
        this.toastArea.className = 'toast-area';
        this.root.appendChild(this.toastArea);

        // sand tray
        const tray = this.section('Sands', 'sand-tray');
        this.sandInput = document.createElement('input');
        this.sandInput.type = 'file';
        this.sandInput.accept = 'image/png,image/jpeg';
        this.sandInput.multiple = true;
        this.sandInput.addEventListener('change', () => {
            const files = Array.from(this.sandInput.files ?? []).map((f) => ({
                blob: f as Blob,
                name: f.name,
            }));
            this.sandInput.value = '';
            if (files.length > 0) {
                void this.addSandFiles(files);
            }
        });
        tray.appendChild(this.sandInput);
        this.uploadErrorList = document.createElement('ul');
        this.uploadErrorList.className = 'upload-errors';
        tray.appendChild(this.uploadErrorList);
        this.cardList = document.createElement('div');
        this.cardList.className = 'sand-cards';
        tray.appendChild(this.cardList);

        // plan controls
        const planBar = this.section('Mixing plan', 'plan-bar');
        const sizeLabel = document.createElement('label');
        sizeLabel.textContent = 'set size ';
        this.setSizeInput = document.createElement('input');
        this.setSizeInput.type = 'number';
        this.setSizeInput.min = '2';
        this.setSizeInput.max = '256';
        this.setSizeInput.value = String(this.options.defaultSetSize ?? 16);
        sizeLabel.appendChild(this.setSizeInput);
        planBar.appendChild(sizeLabel);
        this.buildPlanButton = document.createElement('button');
        this.buildPlanButton.textContent = 'Build plan';
        this.buildPlanButton.addEventListener('click', () => void this.buildPlan());
        planBar.appendChild(this.buildPlanButton);
        this.planBadge = this.badge();
        planBar.appendChild(this.planBadge);

        // mixture strip
        const strip = this.section('Mixture strip', 'swatch-section');
        this.swatchBadge = this.badge();
        strip.appendChild(this.swatchBadge);
        this.swatchStrip = document.createElement('div');
        this.swatchStrip.className = 'swatch-strip';
        strip.appendChild(this.swatchStrip);

        // histogram + handles
        const histSection = this.section('Source histogram', 'histogram-section');
        this.sourceInput = document.createElement('input');
        this.sourceInput.type = 'file';
        this.sourceInput.accept = 'image/png,image/jpeg';
        this.sourceInput.addEventListener('change', () => {
            const file = this.sourceInput.files?.[0];
            if (file !== undefined) {
                void this.setSourceBlob(file, file.name);
            }
        });
        histSection.appendChild(this.sourceInput);
        const histWrap = document.createElement('div');
        histWrap.className = 'histogram-wrap';
        this.histogramView = new HistogramView(512, 120);
        histWrap.appendChild(this.histogramView.canvas);
        this.handleOverlay = document.createElement('div');
        this.handleOverlay.className = 'handle-overlay';
        histWrap.appendChild(this.handleOverlay);
        histSection.appendChild(histWrap);

        // preview
        const previewSection = this.section('Render preview', 'preview-section');
        this.previewBadge = this.badge();
        previewSection.appendChild(this.previewBadge);
        previewSection.appendChild(this.preview.element);
        this.fullRenderButton = document.createElement('button');
        this.fullRenderButton.textContent = 'Full-quality render';
        this.fullRenderButton.addEventListener('click', () => void this.preview.renderFull());
        previewSection.appendChild(this.fullRenderButton);

        // recipe export
        const recipeSection = this.section('Recipe', 'recipe-section');
        this.exportButton = document.createElement('button');
        this.exportButton.textContent = 'Export recipe (CSV)';
        this.exportButton.disabled = true;
        this.exportButton.addEventListener('click', () => {
            void this.exportRecipe().catch((err) => this.toast(errorMessage(err)));
        });
        recipeSection.appendChild(this.exportButton);
    }

    private section(titleText: string, className: string): HTMLElement {
        const section = document.createElement('section');
        section.className = className;
        const heading = document.createElement('h2');
        heading.textContent = titleText;
        section.appendChild(heading);
        this.root.appendChild(section);
        return section;
    }

    private badge(): HTMLElement {
        const badge = document.createElement('span');
        badge.className = 'dirty-badge';
        badge.textContent = 'stale';
        badge.hidden = true;
        return badge;
    }

    // ---- rendering ----

    private renderAll(): void {
        this.renderSandCards();
        this.renderUploadErrors();
        this.renderSwatchStrip();
        this.renderBadges();
    }

    private renderSandCards(): void {
        this.cardList.replaceChildren();
        for (const sand of this.state.sortedSands()) {
            const card = document.createElement('div');
            card.className = 'sand-card';
            card.dataset.sandId = sand.id;

            const blob = this.sandBlobs.get(sand.id);
            if (blob !== undefined && typeof URL.createObjectURL === 'function') {
                const thumb = document.createElement('img');
                thumb.className = 'sand-thumb';
                thumb.alt = sand.name;
                thumb.src = URL.createObjectURL(blob);
                card.appendChild(thumb);
            } else {
                const chip = document.createElement('div');
                chip.className = 'sand-chip';
                const v = Math.round(sand.mean_gray);
                chip.style.background = `rgb(${v}, ${v}, ${v})`;
                card.appendChild(chip);
            }

            const name = document.createElement('div');
            name.className = 'sand-name';
            name.textContent = sand.name;
            card.appendChild(name);

            const mean = document.createElement('div');
            mean.className = 'sand-mean';
            mean.textContent = `mean gray ${sand.mean_gray.toFixed(1)}`;
            card.appendChild(mean);

            const remove = document.createElement('button');
            remove.className = 'sand-delete';
            remove.textContent = 'remove';
            remove.addEventListener('click', () => void this.deleteSand(sand.id));
            card.appendChild(remove);

            this.cardList.appendChild(card);
        }
    }

    private renderUploadErrors(): void {
        this.uploadErrorList.replaceChildren();
        for (const failure of this.uploadFailures) {
            const item = document.createElement('li');
            item.className = 'upload-error';
            item.textContent = `${failure.name}: ${failure.message}`;
            this.uploadErrorList.appendChild(item);
        }
    }

    private renderSwatchStrip(): void {
        this.swatchStrip.replaceChildren();
        const plan = this.state.plan;
        if (plan === null) {
            const hint = document.createElement('div');
            hint.className = 'swatch-hint';
            hint.textContent = 'no plan yet';
            this.swatchStrip.appendChild(hint);
            return;
        }
        const names = new Map(plan.sands.map((sand) => [sand.id, sand.name]));
        for (const mixture of plan.mixtures) {
            const tile = document.createElement('figure');
            tile.className = 'swatch-tile';
            tile.dataset.slot = String(mixture.slot);

            const img = document.createElement('img');
            img.className = 'swatch-image';
            img.alt = `slot ${mixture.slot} swatch`;
            img.src = `${this.api.swatchUrl(this.state.sessionId, mixture.slot)}?v=${this.swatchVersion}`;
            tile.appendChild(img);

            const caption = document.createElement('figcaption');
            const slotLine = document.createElement('div');
            slotLine.className = 'swatch-slot';
            slotLine.textContent = `slot ${mixture.slot}`;
            caption.appendChild(slotLine);
            mixture.components.forEach((component, i) => {
                const line = document.createElement('div');
                line.className = 'swatch-parts';
                const name = names.get(component.sand_id) ?? component.sand_id;
                const percent = mixture.percentages[i] ?? 0;
                const unit = component.parts === 1 ? 'part' : 'parts';
                line.textContent = `${name}: ${component.parts} ${unit} (${percent.toFixed(2)}%)`;
                caption.appendChild(line);
            });
            const expected = document.createElement('div');
            expected.className = 'swatch-expected';
            expected.textContent = `expected gray ${mixture.expected_gray.toFixed(1)}`;
            caption.appendChild(expected);
            tile.appendChild(caption);

            this.swatchStrip.appendChild(tile);
        }
    }

    private renderBadges(): void {
        this.planBadge.hidden = !this.state.dirty.plan;
        this.swatchBadge.hidden = !this.state.dirty.swatches;
        this.previewBadge.hidden = !this.state.dirty.preview;
        const planReady = this.state.session?.has_plan === true;
        this.exportButton.disabled = !planReady;
        this.fullRenderButton.disabled = !(planReady && this.state.hasSource);
    }

    private installHandles(): void {
        this.handles?.destroy();
        this.handleOverlay.classList.remove('handles-disabled');
        const thresholds = this.state.thresholds ?? [];
        this.handles = new BoundaryHandles({
            container: this.handleOverlay,
            thresholds,
            settleMs: this.options.settleMs,
            metrics: this.options.handleMetrics,
            onSettled: (index, value) => {
                void this.commitBoundary(index, value);
            },
        });
    }

    private disableHandles(): void {
        this.handles?.destroy();
        this.handles = null;
        this.handleOverlay.classList.add('handles-disabled');
    }

    private async updateHistogram(blob: Blob): Promise<void> {
        try {
            const bitmap = await createImageBitmap(blob);
            const pixels = downscalePixels(bitmap, 256);
            if (pixels !== null) {
                this.histogramView.setBins(grayHistogram(pixels));
                return;
            }
        } catch {
            // fall through to the empty display
        }
        this.histogramView.clear();
    }
}

export function mountStudio(root: HTMLElement, api: StudioApi, options: StudioOptions = {}): StudioApp {
    return new StudioApp(root, api, options);
}
