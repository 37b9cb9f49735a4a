/** Arrow keys -> steering directions. */
import type { Direction } from "./protocol.js";

const KEY_MAP: Record<string, Direction> = {
  ArrowLeft: "left",
  ArrowRight: "right",
  ArrowUp: "up",
  ArrowDown: "down",
};

export function directionForKey(key: string): Direction | null {
  return KEY_MAP[key] ?? null;
}

interface KeyEventTargetLike {
  addEventListener(type: "keydown", cb: (e: { key: string; preventDefault(): void }) => void): void;
  removeEventListener(type: "keydown", cb: (e: { key: string; preventDefault(): void }) => void): void;
}

/**
 * Wires keydown to `press`. The session already caps input at one key per
 * tick, so OS key repeat is naturally rate-limited; returns a detach
 * function.
 */
export function attachKeyboard(
  target: KeyEventTargetLike,
  press: (d: Direction) => boolean,
): () => void {
  const handler = (e: { key: string; preventDefault(): void }) => {
    const dir = directionForKey(e.key);
    if (dir !== null) {
      e.preventDefault();
      press(dir);
    }
  };
  target.addEventListener("keydown", handler);
  return () => target.removeEventListener("keydown", handler);
}
