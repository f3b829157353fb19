/** Error carrying the server's own explanation, verbatim. */
export class ApiError extends Error {
    constructor(status, detail) {
        super(detail);
        this.status = status;
        this.detail = detail;
        this.name = "ApiError";
    }
}
async function parseError(response) {
    let detail = `${response.status} ${response.statusText}`;
    try {
        const body = await response.json();
        if (typeof body.detail === "string")
            detail = body.detail;
        else if (body.detail)
            detail = JSON.stringify(body.detail);
    }
    catch {
        // keep the status line
    }
    throw new ApiError(response.status, detail);
}
export class ApiClient {
    constructor(baseUrl = "", fetchFn = fetch) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async request(path, init) {
        const response = await this.fetchFn(this.baseUrl + path, init);
        if (!response.ok)
            await parseError(response);
        if (response.status === 204)
            return undefined;
        return (await response.json());
    }
    createSession(body) {
        return this.request("/sessions", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
    }
    getState(id) {
        return this.request(`/sessions/${id}`);
    }
    postFeedback(id, guess, feedback) {
        return this.request(`/sessions/${id}/feedback`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ guess, feedback }),
        });
    }
    deleteSession(id) {
        return this.request(`/sessions/${id}`, { method: "DELETE" });
    }
}
