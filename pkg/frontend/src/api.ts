// Typed client for the sandtone HTTP service. Every artifact the studio
// displays comes through this module; nothing is computed locally.

export interface SandCard {
    id: string;
    name: string;
    mean_gray: number;
    source_file: string | null;
}

export interface SessionView {
    id: string;
    seed: number;
    created_at: string;
    sands: SandCard[];
    set_size: number | null;
    table: number[] | null;
    has_plan: boolean;
}

export interface PlanComponent {
    sand_id: string;
    parts: number;
}

export interface PlanMixture {
    slot: number;
    components: PlanComponent[];
    percentages: number[];
    expected_gray: number;
}

export interface PlanDocument {
    version: number;
    set_size: number;
    sands: SandCard[];
    mixtures: PlanMixture[];
}

export interface UploadResult {
    sand_id: string;
    mean_gray: number;
}

export interface RenderTicket {
    render_id: string;
    status: 'done' | 'pending';
}

export class ApiError extends Error {
    status: number;
    code: string;

    constructor(status: number, code: string, message: string) {
        super(message);
        this.name = 'ApiError';
        this.status = status;
        this.code = code;
    }
}

interface MultipartField {
    name: string;
    value: Blob | string;
    filename?: string;
    type?: string;
}

// Multipart bodies are assembled by hand instead of through FormData:
// the bytes are identical, but a hand-rolled body keeps uploads working
// in DOM test environments whose FormData class is not the one the
// fetch implementation understands.
async function encodeMultipart(
    fields: MultipartField[],
): Promise<{ body: Uint8Array<ArrayBuffer>; contentType: string }> {
    const boundary = `sandtone-${Math.random().toString(36).slice(2)}${Date.now().toString(36)}`;
    const encoder = new TextEncoder();
    const chunks: Uint8Array[] = [];
    for (const field of fields) {
        let head = `--${boundary}\r\nContent-Disposition: form-data; name="${field.name}"`;
        if (field.filename !== undefined) {
            head += `; filename="${field.filename}"`;
        }
        head += '\r\n';
        if (field.type !== undefined) {
            head += `Content-Type: ${field.type}\r\n`;
        }
        head += '\r\n';
        chunks.push(encoder.encode(head));
        if (typeof field.value === 'string') {
            chunks.push(encoder.encode(field.value));
        } else {
            chunks.push(new Uint8Array(await field.value.arrayBuffer()));
        }
        chunks.push(encoder.encode('\r\n'));
    }
    chunks.push(encoder.encode(`--${boundary}--\r\n`));
    const total = chunks.reduce((sum, chunk) => sum + chunk.length, 0);
    const body = new Uint8Array(total);
    let offset = 0;
    for (const chunk of chunks) {
        body.set(chunk, offset);
        offset += chunk.length;
    }
    return { body, contentType: `multipart/form-data; boundary=${boundary}` };
}

async function raiseForStatus(response: Response): Promise<void> {
    if (response.ok) {
        return;
    }
    let code = 'error';
    let message = `HTTP ${response.status}`;
    try {
        const body = await response.json();
        if (typeof body.code === 'string') code = body.code;
        if (typeof body.message === 'string') message = body.message;
    } catch {
        // non-JSON error body, keep the generic message
    }
    throw new ApiError(response.status, code, message);
}

export class StudioApi {
    readonly baseUrl: string;
    private fetchImpl: typeof fetch;

    constructor(baseUrl: string, fetchImpl?: typeof fetch) {
        this.baseUrl = baseUrl.replace(/\/+$/, '');
        this.fetchImpl = fetchImpl ?? fetch.bind(globalThis);
    }

    private async request(path: string, init?: RequestInit): Promise<Response> {
        const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
        await raiseForStatus(response);
        return response;
    }

    async createSession(seed?: number): Promise<SessionView> {
        const init: RequestInit = { method: 'POST' };
        if (seed !== undefined) {
            init.headers = { 'Content-Type': 'application/json' };
            init.body = JSON.stringify({ seed });
        }
        const response = await this.request('/sessions', init);
        return response.json();
    }

    async getSession(sessionId: string): Promise<SessionView> {
        const response = await this.request(`/sessions/${sessionId}`);
        return response.json();
    }

    async uploadSand(sessionId: string, file: Blob, filename: string): Promise<UploadResult> {
        const { body, contentType } = await encodeMultipart([
            { name: 'file', value: file, filename, type: 'image/png' },
        ]);
        const response = await this.request(`/sessions/${sessionId}/sands`, {
            method: 'POST',
            headers: { 'Content-Type': contentType },
            body,
        });
        return response.json();
    }

    async deleteSand(sessionId: string, sandId: string): Promise<void> {
        await this.request(`/sessions/${sessionId}/sands/${sandId}`, { method: 'DELETE' });
    }

    async buildPlan(sessionId: string, setSize: number, seed?: number): Promise<PlanDocument> {
        const body: Record<string, number> = { set_size: setSize };
        if (seed !== undefined) {
            body.seed = seed;
        }
        const response = await this.request(`/sessions/${sessionId}/plan`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify(body),
        });
        return response.json();
    }

    async getPlan(sessionId: string): Promise<PlanDocument> {
        const response = await this.request(`/sessions/${sessionId}/plan`);
        return response.json();
    }

    swatchUrl(sessionId: string, slot: number): string {
        return `${this.baseUrl}/sessions/${sessionId}/swatches/${slot}`;
    }

    async patchBoundary(sessionId: string, index: number, threshold: number): Promise<number[]> {
        const response = await this.request(`/sessions/${sessionId}/table`, {
            method: 'PATCH',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ index, threshold }),
        });
        const body = await response.json();
        return body.thresholds;
    }

    async requestRender(
        sessionId: string,
        source: Blob,
        filename: string,
        blockSize: number,
    ): Promise<RenderTicket> {
        const { body, contentType } = await encodeMultipart([
            { name: 'source', value: source, filename, type: 'image/png' },
            { name: 'block_size', value: String(blockSize) },
        ]);
        const response = await this.request(`/sessions/${sessionId}/render`, {
            method: 'POST',
            headers: { 'Content-Type': contentType },
            body,
        });
        return response.json();
    }

    // Resolves to the PNG bytes once the render is done, null while pending.
    async fetchRender(renderId: string): Promise<Blob | null> {
        const response = await this.fetchImpl(`${this.baseUrl}/renders/${renderId}`);
        if (response.status === 202) {
            return null;
        }
        await raiseForStatus(response);
        return response.blob();
    }

    async waitForRender(
        renderId: string,
        options?: { intervalMs?: number; timeoutMs?: number },
    ): Promise<Blob> {
        const intervalMs = options?.intervalMs ?? 500;
        const timeoutMs = options?.timeoutMs ?? 60000;
        const deadline = Date.now() + timeoutMs;
        for (;;) {
            const blob = await this.fetchRender(renderId);
            if (blob !== null) {
                return blob;
            }
            if (Date.now() >= deadline) {
                throw new ApiError(408, 'render_timeout', `render ${renderId} still pending`);
            }
            await new Promise((resolve) => setTimeout(resolve, intervalMs));
        }
    }

    recipeUrl(sessionId: string): string {
        return `${this.baseUrl}/sessions/${sessionId}/recipe`;
    }

    async fetchRecipe(sessionId: string): Promise<string> {
        const response = await this.request(`/sessions/${sessionId}/recipe`);
        return response.text();
    }
}
