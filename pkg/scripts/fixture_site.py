#!/usr/bin/env python3
"""Local 20-page fixture site for crawler and probe testing.

Serves deterministic HTML: a cookie-banner page, responsive and
non-responsive layouts, a tall page, and interlinked article pages.

Usage: python scripts/fixture_site.py [--port 8818]
"""

from __future__ import annotations

import argparse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

BANNER_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><meta name="viewport" content="width=device-width">
<title>Cookie banner fixture</title></head>
<body>
<h1>Article with a consent banner</h1>
<p>Body content underneath the overlay.</p>
<a href="/page/3">continue reading</a>
<div id="cookie-banner" style="position:fixed;left:0;top:0;width:100%;height:40%;
background:#333;color:#fff;z-index:1000;">
  <p>We value your privacy.</p>
  <button onclick="document.getElementById('cookie-banner').remove()">Accept all</button>
  <button onclick="void(0)">Preferences</button>
</div>
</body></html>"""

VIEWPORT_META_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><meta name="viewport" content="width=device-width, initial-scale=1">
<title>Responsive fixture</title></head>
<body><h1>Fluid layout</h1><p style="max-width:100%">Everything fits the viewport.</p>
<a href="/page/4">next</a></body></html>"""

OVERFLOW_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><meta name="viewport" content="width=device-width">
<title>Overflow fixture</title></head>
<body><h1>Fixed-width content</h1>
<div style="width:2000px;background:#eee">This block forces horizontal overflow on phones.</div>
<a href="/page/5">next</a></body></html>"""

NO_META_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>No viewport meta</title></head>
<body><h1>Desktop-era page</h1><p>No viewport meta tag here.</p>
<a href="/page/6">next</a></body></html>"""

TALL_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><meta name="viewport" content="width=device-width">
<title>Tall fixture</title></head>
<body style="margin:0"><div style="height:3000px;
background:linear-gradient(#fff,#47a)">scrolling canvas</div>
<a href="/page/7">next</a></body></html>"""


def article(n: int) -> str:
    neighbors = [(n + k) % 20 for k in (1, 2, 5)]
    links = "\n".join(f'<li><a href="/page/{m}">article {m}</a></li>' for m in neighbors)
    return f"""<!doctype html>
<html><head><meta charset="utf-8"><meta name="viewport" content="width=device-width">
<title>Article {n}</title></head>
<body><h1>Article {n}</h1>
<p>Paragraph one of article {n} with a <a href="/page/{(n + 3) % 20}">link</a> inline.</p>
<img src="data:image/gif;base64,R0lGODlhAQABAAAAACw=" alt="placeholder {n}" width="60" height="40">
<ul>{links}</ul>
<button>Subscribe</button>
</body></html>"""


def build_pages() -> dict[str, str]:
    pages = {
        "/": article(0).replace("Article 0", "Fixture index"),
        "/cookie-banner": BANNER_PAGE,
        "/viewport-meta": VIEWPORT_META_PAGE,
        "/overflow": OVERFLOW_PAGE,
        "/no-meta": NO_META_PAGE,
        "/tall": TALL_PAGE,
    }
    for n in range(3, 20):
        pages[f"/page/{n}"] = article(n)
    # index links to every special page so a crawl reaches them all
    extra = "".join(f'<a href="{path}">{path}</a> ' for path in sorted(pages))
    pages["/"] = pages["/"].replace("</body>", f"<nav>{extra}</nav></body>")
    return pages


class FixtureHandler(BaseHTTPRequestHandler):
    pages = build_pages()

    def log_message(self, fmt, *args):
        pass

    def do_GET(self):
        body = self.pages.get(self.path.split("?")[0])
        if body is None:
            self.send_response(404)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        data = body.encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "text/html; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def serve(port: int = 0) -> ThreadingHTTPServer:
    return ThreadingHTTPServer(("127.0.0.1", port), FixtureHandler)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8818)
    args = parser.parse_args()
    httpd = serve(args.port)
    print(f"fixture site on http://127.0.0.1:{httpd.server_address[1]} "
          f"({len(FixtureHandler.pages)} pages)")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
