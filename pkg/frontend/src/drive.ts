/**
 * Drive-page controller: four arrows plus the always-available stop.
 * Busy rejections surface as notices, never as thrown errors, so a
 * click during a running program is a visible no-op.
 */

import { ApiError, type BusApi, type TeleopAction } from "./api.js";

export interface Notice {
  kind: "ok" | "busy" | "error";
  text: string;
}

export class DrivePage {
  readonly notices: Notice[] = [];

  constructor(
    private readonly api: BusApi,
    private readonly onNotice?: (notice: Notice) => void,
  ) {}

  private notify(notice: Notice): void {
    this.notices.push(notice);
    this.onNotice?.(notice);
  }

  async press(action: TeleopAction): Promise<boolean> {
    try {
      await this.api.teleop(action);
      this.notify({ kind: "ok", text: action });
      return true;
    } catch (e) {
      if (e instanceof ApiError && e.code === "busy") {
        this.notify({ kind: "busy", text: "The robot is busy running a program. Stop it first." });
        return false;
      }
      const reason = e instanceof ApiError ? e.reason : String(e);
      this.notify({ kind: "error", text: `Could not reach the robot (${reason}). Try again.` });
      return false;
    }
  }

  /** The emergency stop: always enabled, always sent. */
  async stop(): Promise<boolean> {
    return this.press("stop");
  }
}
