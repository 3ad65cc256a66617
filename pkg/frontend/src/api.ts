// Thin client for the workspace HTTP API, including SSE stream consumption.

import type { ControlWidget, DocumentState, Workspace, WorkspaceSummary, Zone } from "./state.js";

export interface ApiError {
  code: string;
  message: string;
  detail: unknown;
}

export class ApiRequestError extends Error {
  constructor(public readonly status: number, public readonly body: ApiError) {
    super(`${body.code}: ${body.message}`);
  }
}

export interface StreamHandlers {
  onDelta?: (text: string) => void;
  onError?: (error: ApiError) => void;
}

async function checked<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    const body = (await resp.json()) as ApiError;
    throw new ApiRequestError(resp.status, body);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.url(path), {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    return checked<T>(resp);
  }

  // workspace lifecycle

  createWorkspace(name: string): Promise<Workspace> {
    return this.request("POST", "/workspaces", { name });
  }

  listWorkspaces(): Promise<WorkspaceSummary[]> {
    return this.request("GET", "/workspaces");
  }

  getWorkspace(id: string): Promise<Workspace> {
    return this.request("GET", `/workspaces/${id}`);
  }

  renameWorkspace(id: string, name: string): Promise<Workspace> {
    return this.request("PATCH", `/workspaces/${id}`, { name });
  }

  duplicateWorkspace(id: string, name: string): Promise<Workspace> {
    return this.request("POST", `/workspaces/${id}:duplicate`, { name });
  }

  deleteWorkspace(id: string): Promise<void> {
    return this.request("DELETE", `/workspaces/${id}`);
  }

  // widgets

  createWidget(wsId: string, position: [number, number]): Promise<ControlWidget> {
    return this.request("POST", `/workspaces/${wsId}/widgets`, { position });
  }

  moveWidget(
    wsId: string,
    widgetId: string,
    zone: Zone,
    position: [number, number] | null,
  ): Promise<ControlWidget> {
    return this.request("POST", `/workspaces/${wsId}/widgets/${widgetId}:move`, {
      zone,
      position,
    });
  }

  updateWidget(
    wsId: string,
    widgetId: string,
    fields: { title?: string; value?: string; size?: [number, number] },
  ): Promise<ControlWidget> {
    return this.request("PATCH", `/workspaces/${wsId}/widgets/${widgetId}`, fields);
  }

  saveInput(wsId: string, widgetId: string): Promise<ControlWidget> {
    return this.request("POST", `/workspaces/${wsId}/widgets/${widgetId}:save-input`);
  }

  selectOption(wsId: string, widgetId: string, index: number): Promise<ControlWidget> {
    return this.request("POST", `/workspaces/${wsId}/widgets/${widgetId}:select-option`, {
      index,
    });
  }

  deleteWidget(wsId: string, widgetId: string): Promise<void> {
    return this.request("DELETE", `/workspaces/${wsId}/widgets/${widgetId}`);
  }

  // structured flows

  generateWidgets(wsId: string, guidingPrompt?: string): Promise<ControlWidget[]> {
    return this.request("POST", `/workspaces/${wsId}/widgets:generate`, {
      guiding_prompt: guidingPrompt ?? null,
    });
  }

  suggestOptions(
    wsId: string,
    widgetId: string,
    guidingPrompt?: string,
  ): Promise<ControlWidget> {
    return this.request("POST", `/workspaces/${wsId}/widgets/${widgetId}/options:suggest`, {
      guiding_prompt: guidingPrompt ?? null,
    });
  }

  extractValue(wsId: string, widgetId: string): Promise<ControlWidget> {
    return this.request("POST", `/workspaces/${wsId}/widgets/${widgetId}/options:extract`);
  }

  // document

  getDocument(wsId: string): Promise<DocumentState> {
    return this.request("GET", `/workspaces/${wsId}/document`);
  }

  putDocument(wsId: string, content: string, checkpoint: boolean): Promise<DocumentState> {
    return this.request("PUT", `/workspaces/${wsId}/document`, { content, checkpoint });
  }

  getHistory(wsId: string): Promise<DocumentState["history"]> {
    return this.request("GET", `/workspaces/${wsId}/document/history`);
  }

  revert(wsId: string, revisionIndex: number): Promise<DocumentState> {
    return this.request("POST", `/workspaces/${wsId}/document:revert`, {
      revision_index: revisionIndex,
    });
  }

  // streaming flows

  rephrase(wsId: string, handlers: StreamHandlers = {}): Promise<string> {
    return this.stream(`/workspaces/${wsId}/document:rephrase`, undefined, handlers);
  }

  applyPrompt(wsId: string, prompt: string, handlers: StreamHandlers = {}): Promise<string> {
    return this.stream(`/workspaces/${wsId}/document:prompt`, { prompt }, handlers);
  }

  /** POST to an SSE endpoint, resolving to the concatenated delta text. */
  private async stream(
    path: string,
    body: unknown,
    handlers: StreamHandlers,
  ): Promise<string> {
    const resp = await fetch(this.url(path), {
      method: "POST",
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      const errBody = (await resp.json()) as ApiError;
      throw new ApiRequestError(resp.status, errBody);
    }
    if (!resp.body) throw new Error("response has no body stream");

    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let eventName = "";
    const parts: string[] = [];
    let streamError: ApiError | null = null;

    const handleLine = (line: string) => {
      if (line.startsWith("event:")) {
        eventName = line.slice("event:".length).trim();
      } else if (line.startsWith("data:")) {
        const data = JSON.parse(line.slice("data:".length));
        if (eventName === "delta") {
          parts.push(data.text as string);
          handlers.onDelta?.(data.text as string);
        } else if (eventName === "error") {
          streamError = data as ApiError;
          handlers.onError?.(streamError);
        }
      }
    };

    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        handleLine(buffer.slice(0, newline).trimEnd());
        buffer = buffer.slice(newline + 1);
      }
    }
    if (streamError !== null) {
      throw new ApiRequestError(502, streamError);
    }
    return parts.join("");
  }
}
