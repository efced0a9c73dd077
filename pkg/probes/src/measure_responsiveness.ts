// Injected probe: the two layout-responsiveness signals.
// Evaluates to { content_width_ok, has_viewport_meta }.
//
// content_width_ok: the document's scrollable width fits the window
// (1px tolerance absorbs subpixel rounding). has_viewport_meta: a
// <meta name="viewport"> whose content mentions width.
(() => {
  let contentWidthOk = true;
  let hasViewportMeta = false;
  try {
    const root = document.documentElement;
    const body = document.body;
    const scrollWidth = Math.max(
      root ? root.scrollWidth : 0,
      body ? body.scrollWidth : 0
    );
    contentWidthOk = scrollWidth <= window.innerWidth + 1;

    const meta = document.querySelector('meta[name="viewport" i]');
    const content = meta ? meta.getAttribute("content") || "" : "";
    hasViewportMeta = /width/i.test(content);
  } catch {
    // fall through with defaults; this probe must not throw
  }
  return { content_width_ok: contentWidthOk, has_viewport_meta: hasViewportMeta };
})();
