// Newline-delimited JSON event stream over fetch. Works in browsers and in
// node test environments (no EventSource dependency).

import { TwinEvent } from "./types.js";

export interface StreamHandle {
  stop: () => void;
  done: Promise<void>;
}

export function openEventStream(
  base: string,
  onEvent: (event: TwinEvent) => void,
  onClose: (err?: unknown) => void,
): StreamHandle {
  const controller = new AbortController();

  const done = (async () => {
    try {
      const response = await fetch(base + "/events", { signal: controller.signal });
      if (!response.ok || !response.body) {
        throw new Error(`event stream failed: ${response.status}`);
      }
      const reader = response.body.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      for (;;) {
        const { value, done: eof } = await reader.read();
        if (eof) break;
        buffer += decoder.decode(value, { stream: true });
        let nl = buffer.indexOf("\n");
        while (nl >= 0) {
          const line = buffer.slice(0, nl).trim();
          buffer = buffer.slice(nl + 1);
          if (line) onEvent(JSON.parse(line) as TwinEvent);
          nl = buffer.indexOf("\n");
        }
      }
      onClose();
    } catch (err) {
      if (!controller.signal.aborted) onClose(err);
      else onClose();
    }
  })();

  return { stop: () => controller.abort(), done };
}
