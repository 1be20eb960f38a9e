/** Chat-page controller: a transcript plus send-and-append. */

import { ApiError, type BusApi } from "./api.js";

export interface ChatLine {
  who: "you" | "wolly";
  text: string;
}

export class ChatPage {
  readonly transcript: ChatLine[] = [];

  constructor(
    private readonly api: BusApi,
    private readonly session: string,
    private readonly onLine?: (line: ChatLine) => void,
  ) {}

  private append(line: ChatLine): void {
    this.transcript.push(line);
    this.onLine?.(line);
  }

  async send(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed) return;
    this.append({ who: "you", text: trimmed });
    try {
      const reply = await this.api.chat(this.session, trimmed);
      this.append({ who: "wolly", text: reply });
    } catch (e) {
      const reason = e instanceof ApiError ? e.reason : String(e);
      this.append({ who: "wolly", text: `(connection trouble: ${reason})` });
    }
  }
}
