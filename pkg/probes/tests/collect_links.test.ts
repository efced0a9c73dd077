import { beforeEach, describe, expect, it } from "vitest";

import { runProbe } from "./helpers";

describe("collect_links probe", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("returns hrefs deduplicated in document order", () => {
    document.body.innerHTML = `
      <a href="/a">one</a>
      <a href="/b">two</a>
      <a href="/a">one again</a>`;
    expect(runProbe("collect_links")).toEqual(["/a", "/b"]);
  });

  it("returns an empty list without anchors", () => {
    document.body.innerHTML = "<p>no links here</p>";
    expect(runProbe("collect_links")).toEqual([]);
  });

  it("keeps fragment-only hrefs verbatim for the worker to reject", () => {
    document.body.innerHTML = `<a href="#">top</a>`;
    expect(runProbe("collect_links")).toEqual(["#"]);
  });

  it("skips empty href attributes", () => {
    document.body.innerHTML = `<a href="">blank</a><a href="/real">real</a>`;
    expect(runProbe("collect_links")).toEqual(["/real"]);
  });

  it("does not resolve relative URLs", () => {
    document.body.innerHTML = `<a href="page/7">rel</a><a href="../up">up</a>`;
    expect(runProbe("collect_links")).toEqual(["page/7", "../up"]);
  });

  it("is read-only: the DOM is unchanged", () => {
    document.body.innerHTML = `<a href="/x">x</a>`;
    const before = document.body.innerHTML;
    runProbe("collect_links");
    expect(document.body.innerHTML).toBe(before);
  });
});
