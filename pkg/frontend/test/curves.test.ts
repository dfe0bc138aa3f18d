import { beforeEach, describe, expect, it } from "vitest";

import { renderCurves } from "../src/curves.js";
import type { CurveData } from "../src/types.js";

let host: HTMLElement;
beforeEach(() => {
  document.body.innerHTML = '<div id="host"></div>';
  host = document.getElementById("host")!;
});

const CURVES: CurveData = {
  labeled_counts: [10, 15, 20],
  accuracy_pct: [50.0, 62.5, 70.0],
  discovered_classes: [2, 2, 3],
};

describe("renderCurves", () => {
  it("draws accuracy and discovery charts with the expected axis labels", () => {
    renderCurves(host, CURVES);
    const charts = host.querySelectorAll<SVGElement>(".curve-chart");
    expect(charts).toHaveLength(2);
    expect(charts[0]!.dataset.yLabel).toBe("Average Accuracy [%]");
    expect(charts[1]!.dataset.yLabel).toBe("# Discovered Classes");
    const labels = [...host.querySelectorAll(".axis-label")].map(
      (el) => el.textContent,
    );
    expect(labels).toContain("Number of added Samples");
  });

  it("stores the service values verbatim on the markers", () => {
    renderCurves(host, CURVES);
    const charts = host.querySelectorAll<SVGElement>(".curve-chart");
    const accuracyDots = charts[0]!.querySelectorAll("circle");
    expect([...accuracyDots].map((d) => Number(d.dataset.y)))
      .toEqual([50.0, 62.5, 70.0]);
    expect([...accuracyDots].map((d) => Number(d.dataset.x)))
      .toEqual([0, 5, 10]); // added samples relative to the initial set
    const discoveryDots = charts[1]!.querySelectorAll("circle");
    expect([...discoveryDots].map((d) => Number(d.dataset.y)))
      .toEqual([2, 2, 3]);
  });

  it("renders the discovery series as a step function", () => {
    renderCurves(host, CURVES);
    const charts = host.querySelectorAll<SVGElement>(".curve-chart");
    const accuracyPoints = charts[0]!
      .querySelector("polyline")!
      .getAttribute("points")!
      .split(" ");
    const discoveryPoints = charts[1]!
      .querySelector("polyline")!
      .getAttribute("points")!
      .split(" ");
    // the step polyline inserts one corner vertex per transition
    expect(discoveryPoints.length).toBe(accuracyPoints.length + 2);
  });

  it("handles a single-point history", () => {
    renderCurves(host, {
      labeled_counts: [10],
      accuracy_pct: [50.0],
      discovered_classes: [2],
    });
    const charts = host.querySelectorAll<SVGElement>(".curve-chart");
    expect(charts).toHaveLength(2);
    expect(charts[0]!.querySelectorAll("circle")).toHaveLength(1);
  });

  it("omits the accuracy chart when no test set is attached", () => {
    renderCurves(host, {
      labeled_counts: [10, 15],
      accuracy_pct: [null, null],
      discovered_classes: [2, 3],
    });
    const charts = host.querySelectorAll<SVGElement>(".curve-chart");
    expect(charts).toHaveLength(1);
    expect(charts[0]!.dataset.yLabel).toBe("# Discovered Classes");
  });

  it("rejects an empty history", () => {
    expect(() => renderCurves(host, {
      labeled_counts: [],
      accuracy_pct: [],
      discovered_classes: [],
    })).toThrow(/empty/);
  });
});
