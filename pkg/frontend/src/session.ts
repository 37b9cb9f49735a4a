/**
 * Connection + steering session. All guidance state shown to the user comes
 * from server tick responses; this module never re-derives phases, tiers, or
 * captions from geometry.
 */
import { CadencePlayer } from "./audio.js";
import {
  Direction,
  Pose,
  PulsePattern,
  ServerResponse,
  TickResult,
  decodeResponse,
  encodeSteer,
  encodeTick,
  isTickResult,
} from "./protocol.js";

export interface TransportHandlers {
  onMessage(text: string): void;
  onOpen(): void;
  onClose(): void;
}

export interface Transport {
  send(text: string): void;
  close(): void;
}

/** Anything that can carry one JSON document each way: WebSocket in the
 * browser, a TCP socket in tests. */
export type TransportFactory = (handlers: TransportHandlers) => Transport;

export interface LogEntry {
  t: number;
  text: string;
}

/** Everything the page renders. Mutated in place, read by ui.renderModel. */
export interface SessionView {
  connected: boolean;
  banner: string | null;
  phase: string;
  d: number | null;
  pattern: PulsePattern | null;
  caption: string;
  direction: Direction | null;
  locked: boolean;
  pose: Pose | null;
  targetClass: number | null;
  log: LogEntry[];
}

export interface SessionOptions {
  gainDeg?: number;
  targetClass?: number;
  reconnectMs?: number;
  now?: () => number;
  scheduleReconnect?: (fn: () => void, ms: number) => void;
}

const LOG_CAP = 200;

export class SteerSession {
  readonly view: SessionView;

  private transport: Transport | null = null;
  private pendingKey: Direction | null = null;
  private waiters = new Map<string, { resolve: (r: ServerResponse) => void; reject: (e: Error) => void }>();
  private seq = 0;
  private stopped = false;
  private gainDeg: number;
  private reconnectMs: number;
  private now: () => number;
  private scheduleReconnect: (fn: () => void, ms: number) => void;

  constructor(
    private factory: TransportFactory,
    private player: CadencePlayer,
    opts: SessionOptions = {},
  ) {
    this.gainDeg = opts.gainDeg ?? 2.0;
    this.reconnectMs = opts.reconnectMs ?? 1000;
    this.now = opts.now ?? (() => Date.now());
    this.scheduleReconnect = opts.scheduleReconnect ?? ((fn, ms) => setTimeout(fn, ms));
    this.view = {
      connected: false,
      banner: "connecting…",
      phase: "searching",
      d: null,
      pattern: null,
      caption: "",
      direction: null,
      locked: false,
      pose: null,
      targetClass: opts.targetClass ?? null,
      log: [],
    };
  }

  connect(): void {
    this.stopped = false;
    this.transport = this.factory({
      onMessage: (text) => this.handleMessage(text),
      onOpen: () => {
        this.view.connected = true;
        this.view.banner = null;
        this.log("connected");
      },
      onClose: () => this.handleClose(),
    });
  }

  close(): void {
    this.stopped = true;
    this.player.stop();
    this.transport?.close();
    this.transport = null;
  }

  /**
   * Queue one steering key for the next tick. At most one key is held
   * between ticks (key repeat cannot outrun the tick rate) and keys are
   * dropped entirely while disconnected.
   */
  press(direction: Direction): boolean {
    if (!this.view.connected || this.pendingKey !== null) return false;
    this.pendingKey = direction;
    return true;
  }

  /**
   * One loop iteration: flush the queued key as a steer request, then ask
   * for a guidance tick and fold the result into the view. The returned
   * promise resolves with the tick payload.
   */
  async step(): Promise<TickResult> {
    if (!this.transport || !this.view.connected) {
      throw new Error("not connected");
    }
    const key = this.pendingKey;
    this.pendingKey = null;
    if (key !== null) {
      const steerId = `s${this.seq++}`;
      const steered = this.expect(steerId);
      this.transport.send(encodeSteer(steerId, key, this.gainDeg));
      // Pose echo is best-effort; a drop before the ack surfaces on the tick.
      void steered.then(
        (resp) => {
          const pose = (resp.result as { pose?: Pose } | null)?.pose;
          if (pose) this.view.pose = pose;
        },
        () => {},
      );
    }
    const tickId = `t${this.seq++}`;
    const replied = this.expect(tickId);
    this.transport.send(
      encodeTick(tickId, this.view.targetClass === null ? undefined : this.view.targetClass),
    );
    const resp = await replied;
    if (resp.error) {
      this.log(`server error: ${resp.error}`);
      throw new Error(resp.error);
    }
    if (!isTickResult(resp.result)) {
      this.log("malformed tick result");
      throw new Error("malformed tick result");
    }
    this.apply(resp.result);
    return resp.result;
  }

  private expect(id: string): Promise<ServerResponse> {
    return new Promise((resolve, reject) => {
      this.waiters.set(id, { resolve, reject });
    });
  }

  private handleMessage(text: string): void {
    let resp: ServerResponse;
    try {
      resp = decodeResponse(text);
    } catch (err) {
      this.log(`unreadable frame: ${(err as Error).message}`);
      return;
    }
    const waiter = resp.id === null ? undefined : this.waiters.get(resp.id);
    if (waiter && resp.id !== null) {
      this.waiters.delete(resp.id);
      waiter.resolve(resp);
    } else {
      this.log(`unmatched response id=${resp.id}`);
    }
  }

  private apply(tick: TickResult): void {
    const prevPhase = this.view.phase;
    this.view.phase = tick.phase;
    this.view.d = tick.d;
    this.view.pattern = tick.pattern;
    this.view.direction = tick.direction;
    this.view.pose = tick.pose;
    this.view.locked = tick.phase === "locked";

    this.player.setPattern(tick.pattern);
    if (tick.speech) {
      this.view.caption = tick.speech;
      this.log(`say: ${tick.speech}`);
    }
    if (tick.locked_tone) {
      this.player.lockedTone();
      this.log("locked tone");
    }
    if (tick.phase !== prevPhase) {
      this.log(`phase: ${prevPhase} -> ${tick.phase}`);
    }
  }

  private handleClose(): void {
    const wasConnected = this.view.connected;
    this.view.connected = false;
    this.view.banner = "disconnected — retrying";
    this.pendingKey = null;
    this.player.setPattern(null);
    for (const [, waiter] of this.waiters) {
      waiter.reject(new Error("connection closed"));
    }
    this.waiters.clear();
    if (wasConnected) this.log("disconnected");
    if (!this.stopped) {
      this.scheduleReconnect(() => {
        if (!this.stopped) this.connect();
      }, this.reconnectMs);
    }
  }

  private log(text: string): void {
    this.view.log.push({ t: this.now(), text });
    if (this.view.log.length > LOG_CAP) this.view.log.shift();
  }
}
