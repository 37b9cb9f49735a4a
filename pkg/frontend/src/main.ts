/** Browser entry point: WebSocket transport, real audio, real DOM. */
import { CadencePlayer, webAudioSynth } from "./audio.js";
import { attachKeyboard } from "./keyboard.js";
import { SteerSession, TransportFactory } from "./session.js";
import { renderModel } from "./ui.js";

const TICK_MS = 100;

function wsTransport(url: string): TransportFactory {
  return (handlers) => {
    const ws = new WebSocket(url);
    ws.onopen = () => handlers.onOpen();
    ws.onmessage = (ev) => handlers.onMessage(String(ev.data));
    ws.onclose = () => handlers.onClose();
    ws.onerror = () => {
      /* close fires right after; the banner copy lives there */
    };
    return {
      send: (text) => ws.send(text),
      close: () => ws.close(),
    };
  };
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function start(): void {
  const synth = webAudioSynth(new AudioContext());
  const player = new CadencePlayer(synth);
  const targetInput = el("target") as HTMLInputElement;
  const session = new SteerSession(
    wsTransport(`ws://${location.host}/ws`),
    player,
    { targetClass: Number(targetInput.value) },
  );
  targetInput.addEventListener("change", () => {
    session.view.targetClass = Number(targetInput.value);
  });
  attachKeyboard(window, (d) => session.press(d));
  session.connect();

  const bar = el("pulsebar");
  let flashTimer: ReturnType<typeof setInterval> | null = null;
  let flashPeriod: number | null = null;

  const paint = () => {
    const m = renderModel(session.view);
    el("banner").textContent = m.banner ?? "";
    el("banner").style.display = m.banner ? "block" : "none";
    el("phase").textContent = m.phaseLabel;
    el("distance").textContent = m.dLabel;
    el("caption").textContent = m.caption;
    el("pose").textContent = m.poseLabel;
    el("badge").style.display = m.lockBadge ? "inline-block" : "none";
    el("cadence").textContent = m.pulse ? m.pulse.label : "silent";
    el("log").textContent = m.logTail.join("\n");

    // Flash the bar at the haptic cadence (or hold it solid when locked).
    const period = m.pulse ? m.pulse.periodMs : null;
    if (m.pulse?.continuous) {
      if (flashTimer) clearInterval(flashTimer);
      flashTimer = null;
      flashPeriod = null;
      bar.classList.add("on");
    } else if (period !== flashPeriod) {
      if (flashTimer) clearInterval(flashTimer);
      flashTimer = null;
      flashPeriod = period;
      bar.classList.remove("on");
      if (period !== null) {
        flashTimer = setInterval(() => bar.classList.toggle("on"), period / 2);
      }
    } else if (!m.pulse) {
      bar.classList.remove("on");
    }
  };

  setInterval(async () => {
    if (session.view.connected) {
      try {
        await session.step();
      } catch {
        /* disconnects surface through the banner */
      }
    }
    paint();
  }, TICK_MS);
}

// Browsers require a user gesture before audio may start.
el("start").addEventListener("click", () => {
  el("start").style.display = "none";
  start();
});
