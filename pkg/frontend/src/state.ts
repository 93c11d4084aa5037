import { PlanDocument, SandCard, SessionView } from './api.js';

// Dirty flags track which derived artifacts no longer match the inputs
// shown on screen. Each flag clears when its artifact is refetched.
export interface DirtyFlags {
    plan: boolean;
    swatches: boolean;
    preview: boolean;
    recipe: boolean;
}

export class StudioState {
    session: SessionView | null = null;
    plan: PlanDocument | null = null;
    thresholds: number[] | null = null;
    sourceBlob: Blob | null = null;
    sourceName = 'source.png';
    dirty: DirtyFlags = { plan: false, swatches: false, preview: false, recipe: false };

    private renderGeneration = 0;

    get sessionId(): string {
        if (this.session === null) {
            throw new Error('no active session');
        }
        return this.session.id;
    }

    get hasPlan(): boolean {
        return this.plan !== null;
    }

    get hasSource(): boolean {
        return this.sourceBlob !== null;
    }

    setSession(view: SessionView): void {
        this.session = view;
        if (view.table !== null) {
            this.thresholds = view.table.slice();
        }
    }

    // Sand cards are displayed darkest first regardless of upload order.
    sortedSands(): SandCard[] {
        if (this.session === null) {
            return [];
        }
        return this.session.sands
            .slice()
            .sort((a, b) => a.mean_gray - b.mean_gray || a.id.localeCompare(b.id));
    }

    markSandsChanged(): void {
        if (this.plan !== null) {
            this.dirty.plan = true;
            this.dirty.swatches = true;
            this.dirty.preview = true;
            this.dirty.recipe = true;
        }
    }

    setPlan(plan: PlanDocument, thresholds: number[]): void {
        this.plan = plan;
        this.thresholds = thresholds.slice();
        this.dirty.plan = false;
        this.dirty.swatches = true;
        this.dirty.preview = true;
        this.dirty.recipe = false;
    }

    setThresholds(thresholds: number[]): void {
        this.thresholds = thresholds.slice();
        this.dirty.preview = true;
    }

    markSwatchesFresh(): void {
        this.dirty.swatches = false;
    }

    markPreviewFresh(): void {
        this.dirty.preview = false;
    }

    markSourceChanged(): void {
        this.dirty.preview = true;
    }

    // Render generations order the preview requests. A response is only
    // applied when its generation is still the latest, so a slow render
    // can never overwrite a newer one.
    nextRenderGeneration(): number {
        this.renderGeneration += 1;
        return this.renderGeneration;
    }

    isCurrentGeneration(generation: number): boolean {
        return generation === this.renderGeneration;
    }
}
