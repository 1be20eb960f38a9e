/**
 * The single live snapshot store. Every page renders from here and the
 * contents come only from server responses, replaced wholesale; nothing
 * in the UI ever writes a fabricated pose or phase.
 */

import type { BusStatus, EmotionReportDoc } from "./api.js";

export interface Snapshot {
  status: BusStatus;
  emotion: EmotionReportDoc | null;
  receivedAt: number;
}

export const STALE_AFTER_MS = 5_000;

export type Listener = (snapshot: Snapshot | null) => void;

export class SnapshotStore {
  private snapshot: Snapshot | null = null;
  private listeners = new Set<Listener>();

  current(): Snapshot | null {
    return this.snapshot;
  }

  /** Replace the whole snapshot; partial merges are deliberately impossible. */
  replace(status: BusStatus, emotion: EmotionReportDoc | null, now: number): void {
    this.snapshot = { status, emotion, receivedAt: now };
    for (const listener of this.listeners) listener(this.snapshot);
  }

  /** No robot data, or nothing fresh for more than the threshold. */
  isStale(now: number, staleAfterMs: number = STALE_AFTER_MS): boolean {
    if (this.snapshot === null) return true;
    if (now - this.snapshot.receivedAt > staleAfterMs) return true;
    return this.snapshot.status.robot === null;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    listener(this.snapshot);
    return () => this.listeners.delete(listener);
  }
}
