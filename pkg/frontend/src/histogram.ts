// Client-side gray histogram, for display only. The service owns the
// authoritative quantization; this just shows where the source pixels
// fall relative to the boundary handles.

export interface PixelSource {
    width: number;
    height: number;
    data: Uint8ClampedArray | Uint8Array;
}

// Gray value per pixel using the same convention as the service:
// round((r + g + b) / 3) with halves rounded up. In integers that is
// floor((2 * sum + 3) / 6).
export function grayHistogram(image: PixelSource): Uint32Array {
    const bins = new Uint32Array(256);
    const data = image.data;
    for (let i = 0; i + 3 < data.length; i += 4) {
        const sum = data[i]! + data[i + 1]! + data[i + 2]!;
        const gray = Math.floor((2 * sum + 3) / 6);
        bins[gray]! += 1;
    }
    return bins;
}

// Draws an image scaled so its long side is at most maxSide, returning
// the pixels. Returns null when the canvas 2d context is unavailable.
export function downscalePixels(
    image: CanvasImageSource & { width: number; height: number },
    maxSide: number,
): PixelSource | null {
    const scale = Math.min(1, maxSide / Math.max(image.width, image.height));
    const width = Math.max(1, Math.round(image.width * scale));
    const height = Math.max(1, Math.round(image.height * scale));
    const canvas = document.createElement('canvas');
    canvas.width = width;
    canvas.height = height;
    const context = canvas.getContext('2d');
    if (context === null) {
        return null;
    }
    context.drawImage(image, 0, 0, width, height);
    return context.getImageData(0, 0, width, height);
}

export class HistogramView {
    readonly canvas: HTMLCanvasElement;
    private bins: Uint32Array = new Uint32Array(256);

    constructor(width: number, height: number) {
        const canvas = document.createElement('canvas');
        canvas.className = 'histogram-canvas';
        canvas.width = width;
        canvas.height = height;
        this.canvas = canvas;
    }

    setBins(bins: Uint32Array): void {
        this.bins = bins;
        this.draw();
    }

    clear(): void {
        this.bins = new Uint32Array(256);
        this.draw();
    }

    private draw(): void {
        const context = this.canvas.getContext('2d');
        if (context === null) {
            return;
        }
        const w = this.canvas.width;
        const h = this.canvas.height;
        context.fillStyle = '#1b1b1f';
        context.fillRect(0, 0, w, h);

        // Log scale keeps sparse tails visible next to dominant bins.
        let peak = 0;
        for (let i = 0; i < 256; i++) {
            const v = Math.log(this.bins[i]! + 1);
            if (v > peak) peak = v;
        }
        if (peak === 0) {
            return;
        }
        context.fillStyle = '#9a8f7a';
        for (let i = 0; i < 256; i++) {
            const frac = Math.log(this.bins[i]! + 1) / peak;
            if (frac <= 0) continue;
            const barHeight = Math.max(1, Math.round(frac * (h - 2)));
            const x0 = Math.floor((i / 256) * w);
            const x1 = Math.floor(((i + 1) / 256) * w);
            context.fillRect(x0, h - barHeight, Math.max(1, x1 - x0), barHeight);
        }
    }
}
