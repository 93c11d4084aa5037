// Draggable boundary handles over the histogram strip. Each interior
// threshold of the assignment table gets one handle. The component keeps
// two value arrays: the server-confirmed thresholds (always strictly
// increasing) and the display values, which may wander while a drag is
// in progress. A drag settles some time after release; only then does the
// settled value reach the onSettled callback, so one drag produces at
// most one callback no matter how many move events it generated. The
// caller is expected to PATCH the table from onSettled and either apply
// the confirmed thresholds or snap the handle back on a collision.

export interface HandleMetrics {
    left: number;
    width: number;
}

export interface BoundaryHandlesOptions {
    container: HTMLElement;
    thresholds: number[];
    settleMs?: number;
    // Pointer x coordinates are mapped to gray values through this. The
    // default reads the container's bounding rect; tests under a DOM
    // without layout inject fixed metrics instead.
    metrics?: () => HandleMetrics;
    onPreview?: (index: number, value: number) => void;
    onSettled: (index: number, value: number) => void;
}

const DEFAULT_SETTLE_MS = 300;

export class BoundaryHandles {
    readonly container: HTMLElement;
    private confirmed: number[];
    private display: number[];
    private elements: HTMLElement[] = [];
    private settleMs: number;
    private metrics: () => HandleMetrics;
    private onPreview: ((index: number, value: number) => void) | undefined;
    private onSettled: (index: number, value: number) => void;

    private dragIndex = -1;
    private dragStartValue = 0;
    private settleTimer: ReturnType<typeof setTimeout> | null = null;
    private pendingIndex = -1;
    private boundMove: (ev: MouseEvent) => void;
    private boundUp: (ev: MouseEvent) => void;

    constructor(options: BoundaryHandlesOptions) {
        this.container = options.container;
        this.confirmed = options.thresholds.slice();
        this.display = options.thresholds.slice();
        this.settleMs = options.settleMs ?? DEFAULT_SETTLE_MS;
        this.metrics = options.metrics ?? (() => {
            const rect = this.container.getBoundingClientRect();
            return { left: rect.left, width: rect.width };
        });
        this.onPreview = options.onPreview;
        this.onSettled = options.onSettled;
        this.boundMove = (ev) => this.handleMove(ev);
        this.boundUp = (ev) => this.handleUp(ev);
        this.container.classList.add('handle-strip');
        this.buildHandles();
    }

    get interiorCount(): number {
        return Math.max(0, this.confirmed.length - 2);
    }

    handleElement(index: number): HTMLElement {
        const element = this.elements[index - 1];
        if (element === undefined) {
            throw new Error(`no handle for threshold index ${index}`);
        }
        return element;
    }

    displayValue(index: number): number {
        const value = this.display[index];
        if (value === undefined) {
            throw new Error(`no threshold at index ${index}`);
        }
        return value;
    }

    // Replaces both confirmed and displayed values, e.g. after the server
    // accepted a PATCH or a new plan arrived.
    applyThresholds(thresholds: number[]): void {
        this.confirmed = thresholds.slice();
        this.display = thresholds.slice();
        if (this.elements.length !== this.interiorCount) {
            this.buildHandles();
        } else {
            for (let i = 1; i < this.confirmed.length - 1; i++) {
                this.position(i);
            }
        }
    }

    // Returns the handle to the last server-confirmed value after a
    // rejected PATCH. The brief CSS pulse makes the jump visible.
    snapBack(index: number): void {
        const confirmed = this.confirmed[index];
        if (confirmed === undefined) {
            return;
        }
        this.display[index] = confirmed;
        this.position(index);
        const element = this.elements[index - 1];
        if (element !== undefined) {
            element.classList.remove('handle-snap-back');
            // Force a reflow when available so the animation restarts.
            void element.offsetWidth;
            element.classList.add('handle-snap-back');
        }
    }

    destroy(): void {
        this.detachDocumentListeners();
        this.clearSettleTimer();
        this.container.replaceChildren();
        this.elements = [];
    }

    private buildHandles(): void {
        this.container.replaceChildren();
        this.elements = [];
        for (let i = 1; i < this.confirmed.length - 1; i++) {
            const handle = document.createElement('div');
            handle.className = 'boundary-handle';
            handle.tabIndex = 0;
            handle.setAttribute('role', 'slider');
            handle.setAttribute('aria-valuemin', '1');
            handle.setAttribute('aria-valuemax', '255');
            const label = document.createElement('span');
            label.className = 'handle-label';
            handle.appendChild(label);
            handle.addEventListener('pointerdown', (ev) => this.handleDown(ev, i));
            handle.addEventListener('keydown', (ev) => this.handleKey(ev, i));
            this.container.appendChild(handle);
            this.elements.push(handle);
            this.position(i);
        }
    }

    private position(index: number): void {
        const element = this.elements[index - 1];
        const value = this.display[index];
        if (element === undefined || value === undefined) {
            return;
        }
        element.style.left = `${(value / 256) * 100}%`;
        element.setAttribute('aria-valuenow', String(value));
        const label = element.firstChild as HTMLElement | null;
        if (label !== null) {
            label.textContent = String(value);
        }
    }

    private valueFromPointer(clientX: number): number {
        const { left, width } = this.metrics();
        if (width <= 0) {
            return this.display[this.dragIndex] ?? 128;
        }
        const fraction = (clientX - left) / width;
        const raw = Math.round(fraction * 256);
        return Math.min(255, Math.max(1, raw));
    }

    private handleDown(ev: MouseEvent, index: number): void {
        ev.preventDefault();
        // A previous drag may still be waiting out its settle window;
        // commit it now so each drag accounts for its own request.
        this.flushPending();
        this.dragIndex = index;
        this.dragStartValue = this.display[index] ?? 0;
        const element = this.elements[index - 1];
        if (element !== undefined) {
            element.classList.add('handle-active');
            const pointerId = (ev as PointerEvent).pointerId;
            if (pointerId !== undefined && typeof element.setPointerCapture === 'function') {
                try {
                    element.setPointerCapture(pointerId);
                } catch {
                    // pointer capture is cosmetic; dragging works without it
                }
            }
        }
        const doc = this.container.ownerDocument;
        doc.addEventListener('pointermove', this.boundMove);
        doc.addEventListener('pointerup', this.boundUp);
    }

    private handleMove(ev: MouseEvent): void {
        if (this.dragIndex === -1) {
            return;
        }
        ev.preventDefault();
        const value = this.valueFromPointer(ev.clientX);
        if (value === this.display[this.dragIndex]) {
            return;
        }
        this.display[this.dragIndex] = value;
        this.position(this.dragIndex);
        this.onPreview?.(this.dragIndex, value);
    }

    private handleUp(ev: MouseEvent): void {
        if (this.dragIndex === -1) {
            return;
        }
        ev.preventDefault();
        const index = this.dragIndex;
        this.dragIndex = -1;
        this.detachDocumentListeners();
        const element = this.elements[index - 1];
        element?.classList.remove('handle-active');
        const value = this.display[index] ?? this.dragStartValue;
        if (value === this.dragStartValue && value === this.confirmed[index]) {
            // Released at the original spot: nothing to request.
            return;
        }
        this.scheduleSettle(index);
    }

    private handleKey(ev: KeyboardEvent, index: number): void {
        let delta = 0;
        if (ev.key === 'ArrowLeft') delta = -1;
        else if (ev.key === 'ArrowRight') delta = 1;
        else return;
        ev.preventDefault();
        if (this.pendingIndex !== -1 && this.pendingIndex !== index) {
            this.flushPending();
        }
        const current = this.display[index] ?? 0;
        const value = Math.min(255, Math.max(1, current + delta));
        if (value === current) {
            return;
        }
        this.display[index] = value;
        this.position(index);
        this.onPreview?.(index, value);
        this.scheduleSettle(index);
    }

    private scheduleSettle(index: number): void {
        this.clearSettleTimer();
        this.pendingIndex = index;
        this.settleTimer = setTimeout(() => {
            this.settleTimer = null;
            this.firePending();
        }, this.settleMs);
    }

    private flushPending(): void {
        if (this.settleTimer !== null) {
            this.clearSettleTimer();
            this.firePending();
        }
    }

    private firePending(): void {
        const index = this.pendingIndex;
        this.pendingIndex = -1;
        if (index === -1) {
            return;
        }
        const value = this.display[index];
        if (value === undefined || value === this.confirmed[index]) {
            // Wandered back to the confirmed value: a no-op, skip it.
            return;
        }
        this.onSettled(index, value);
    }

    private clearSettleTimer(): void {
        if (this.settleTimer !== null) {
            clearTimeout(this.settleTimer);
            this.settleTimer = null;
        }
    }

    private detachDocumentListeners(): void {
        const doc = this.container.ownerDocument;
        doc.removeEventListener('pointermove', this.boundMove);
        doc.removeEventListener('pointerup', this.boundUp);
    }
}
