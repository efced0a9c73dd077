// Injected probe: find consent/notice overlays and click one dismiss-style
// button per overlay. Evaluates to the number of buttons clicked.
//
// An overlay is a fixed/sticky element with z-index >= 100 covering at
// least 25% of the viewport. Within it, the first button/anchor whose
// visible text matches a dismissal keyword gets a single click; the page
// is re-scanned once because closing one banner often reveals another.
(() => {
  const KEYWORDS = ["accept", "agree", "ok", "got it", "close", "dismiss", "continue"];
  const MAX_TEXT_LENGTH = 40;
  const DEADLINE = Date.now() + 5000;

  const viewportCoverage = (el: Element): number => {
    const rect = el.getBoundingClientRect();
    const vw = window.innerWidth;
    const vh = window.innerHeight;
    if (vw <= 0 || vh <= 0) return 0;
    const w = Math.min(rect.right, vw) - Math.max(rect.left, 0);
    const h = Math.min(rect.bottom, vh) - Math.max(rect.top, 0);
    return w > 0 && h > 0 ? (w * h) / (vw * vh) : 0;
  };

  const isOverlay = (el: Element): boolean => {
    const style = window.getComputedStyle(el);
    if (style.position !== "fixed" && style.position !== "sticky") return false;
    const z = parseInt(style.zIndex, 10);
    if (Number.isNaN(z) || z < 100) return false;
    return viewportCoverage(el) >= 0.25;
  };

  const dismissText = (el: Element): string => {
    const fromValue =
      el instanceof HTMLInputElement && typeof el.value === "string" ? el.value : "";
    const text = (el.textContent || fromValue).trim().toLowerCase();
    return text.length <= MAX_TEXT_LENGTH ? text : "";
  };

  const findDismissButton = (overlay: Element): HTMLElement | null => {
    const candidates = overlay.querySelectorAll(
      'button, a, [role="button"], input[type="button"], input[type="submit"]'
    );
    for (const candidate of Array.from(candidates)) {
      const text = dismissText(candidate);
      if (text && KEYWORDS.some((keyword) => text === keyword || text.includes(keyword))) {
        return candidate as HTMLElement;
      }
    }
    return null;
  };

  let clicked = 0;
  try {
    for (let pass = 0; pass < 2; pass++) {
      if (Date.now() > DEADLINE) break;
      const overlays: Element[] = [];
      for (const el of Array.from(document.querySelectorAll("body *"))) {
        if (Date.now() > DEADLINE) break;
        if (isOverlay(el) && !overlays.some((seen) => seen.contains(el))) {
          overlays.push(el);
        }
      }
      let clickedThisPass = 0;
      for (const overlay of overlays) {
        const button = findDismissButton(overlay);
        if (button) {
          button.click();
          clicked += 1;
          clickedThisPass += 1;
        }
      }
      if (clickedThisPass === 0) break; // nothing changed; skip the re-scan
    }
  } catch {
    // heuristics must never break a capture
  }
  return clicked;
})();
