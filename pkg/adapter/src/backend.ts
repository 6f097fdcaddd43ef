import * as tf from '@tensorflow/tfjs';
import { setThreadsCount } from '@tensorflow/tfjs-backend-wasm';

let initialized: Promise<void> | null = null;

/** Single-threaded wasm backend (deterministic); plain cpu as fallback. */
export function initBackend(): Promise<void> {
  if (!initialized) {
    initialized = (async () => {
      try {
        setThreadsCount(1);
        await tf.setBackend('wasm');
      } catch {
        await tf.setBackend('cpu');
      }
      await tf.ready();
    })();
  }
  return initialized;
}

export { tf };
