/**
 * Monitor-page machinery: status polling into the snapshot store, the
 * pose trail, and the world-to-canvas projection. Canvas drawing itself
 * lives in main.ts; everything here is DOM-free and unit-tested.
 */

import type { BusApi } from "./api.js";
import type { SnapshotStore } from "./store.js";

export interface Point {
  x: number;
  y: number;
}

export class TrailTracker {
  readonly points: Point[] = [];

  constructor(private readonly maxPoints = 2000) {}

  push(pose: { x: number; y: number }): void {
    const last = this.points[this.points.length - 1];
    if (last && last.x === pose.x && last.y === pose.y) return;
    this.points.push({ x: pose.x, y: pose.y });
    if (this.points.length > this.maxPoints) this.points.shift();
  }

  clear(): void {
    this.points.length = 0;
  }
}

export interface Viewport {
  width: number;
  height: number;
  metersAcross: number; // world meters mapped to the canvas width
  centerX: number; // world coordinates at the canvas center
  centerY: number;
}

/** World pose (y up) to canvas pixels (y down), heading to radians. */
export function project(pose: { x: number; y: number; heading?: number }, view: Viewport) {
  const scale = view.width / view.metersAcross;
  return {
    px: view.width / 2 + (pose.x - view.centerX) * scale,
    py: view.height / 2 - (pose.y - view.centerY) * scale,
    angle: ((pose.heading ?? 0) * Math.PI) / 180,
    scale,
  };
}

export class MonitorLoop {
  private timer: ReturnType<typeof setInterval> | null = null;
  readonly trail = new TrailTracker();
  lastError: string | null = null;

  constructor(
    private readonly api: BusApi,
    private readonly store: SnapshotStore,
    private readonly intervalMs = 500,
    private readonly clock: () => number = Date.now,
  ) {}

  /** One poll: status + latest emotion, replacing the snapshot wholesale. */
  async tick(): Promise<void> {
    try {
      const status = await this.api.status();
      const emotion = await this.api.latestEmotion();
      this.store.replace(status, emotion, this.clock());
      if (status.robot) this.trail.push(status.robot.pose);
      this.lastError = null;
    } catch (e) {
      this.lastError = String(e); // stale indicator takes over from here
    }
  }

  start(): void {
    if (this.timer !== null) return;
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
