import { readFileSync } from "node:fs";
import { resolve } from "node:path";

const cache = new Map<string, string>();

export function probeSource(name: string): string {
  if (!cache.has(name)) {
    cache.set(
      name,
      readFileSync(resolve(process.cwd(), "dist", `${name}.js`), "utf-8")
    );
  }
  return cache.get(name)!;
}

/** Evaluate a compiled probe exactly as the worker does: verbatim, one value back. */
export function runProbe(name: string): unknown {
  // eslint-disable-next-line no-eval -- intentionally mirrors Runtime.evaluate
  return (0, eval)(probeSource(name));
}

/**
 * jsdom computes no layout, so fixtures pin the rect an element would have.
 */
export function fakeRect(
  el: Element,
  rect: { left: number; top: number; width: number; height: number }
): void {
  Object.defineProperty(el, "getBoundingClientRect", {
    configurable: true,
    value: () => ({
      left: rect.left,
      top: rect.top,
      right: rect.left + rect.width,
      bottom: rect.top + rect.height,
      width: rect.width,
      height: rect.height,
      x: rect.left,
      y: rect.top,
      toJSON: () => ({}),
    }),
  });
}

export function fakeScrollWidth(width: number): void {
  Object.defineProperty(document.documentElement, "scrollWidth", {
    configurable: true,
    value: width,
  });
}
