// Injected probe: harvest anchor hrefs exactly as authored.
// Evaluates to a deduplicated list of non-empty href attribute values in
// document order; URL resolution happens in the worker.
(() => {
  const DEADLINE = Date.now() + 5000;
  const seen = new Set<string>();
  const links: string[] = [];
  try {
    for (const anchor of Array.from(document.querySelectorAll("a[href]"))) {
      if (Date.now() > DEADLINE) break;
      const href = anchor.getAttribute("href");
      if (href && !seen.has(href)) {
        seen.add(href);
        links.push(href);
      }
    }
  } catch {
    // partial results beat a failed capture
  }
  return links;
})();
