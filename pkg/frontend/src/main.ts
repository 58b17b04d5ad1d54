/* Explorer page: a draggable point inside the parameter-space map, a time
 * scrubber and a mode selector. Every change fetches one interpolated frame
 * from the service; all numerics stay on the server.
 */

import {
  CanvasLayout,
  HullPoint,
  clampToHull,
  embed,
  makeLayout,
  requestCoordinates,
  snapVertex,
} from "./geometry.js";
import { FrameRequester, buildFrameUrl } from "./requests.js";
import type { SpaceDescription } from "./types.js";

const VERTEX_SNAP_RADIUS = 0.04;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class Explorer {
  private space!: SpaceDescription;
  private layout!: CanvasLayout;
  private current!: HullPoint;
  private frame = 0;
  private mode = "linear";
  private compare = false;
  private dragging = false;
  private requester = new FrameRequester();
  private refRequesters = new Map<number, FrameRequester>();

  private map = el<HTMLCanvasElement>("map");
  private image = el<HTMLImageElement>("frame");
  private banner = el<HTMLDivElement>("banner");
  private weightsOut = el<HTMLSpanElement>("weights");
  private statusOut = el<HTMLSpanElement>("status");
  private timeSlider = el<HTMLInputElement>("time");
  private timeOut = el<HTMLSpanElement>("time-value");
  private modeSelect = el<HTMLSelectElement>("mode");
  private compareToggle = el<HTMLInputElement>("compare");
  private refsBox = el<HTMLDivElement>("references");

  async start(): Promise<void> {
    let desc: SpaceDescription;
    try {
      const resp = await fetch("/space");
      if (!resp.ok) throw new Error(`service error ${resp.status}`);
      desc = (await resp.json()) as SpaceDescription;
      if (!desc.samples?.length || !desc.simplices?.length) {
        throw new Error("space has no samples or simplices");
      }
    } catch (err) {
      this.showError(err instanceof Error ? err.message : String(err));
      return;
    }
    this.space = desc;
    this.layout = makeLayout(desc, this.map.width, this.map.height);

    this.modeSelect.innerHTML = "";
    for (const mode of desc.modes) {
      const option = document.createElement("option");
      option.value = mode;
      option.textContent = mode;
      this.modeSelect.appendChild(option);
    }
    this.mode = desc.modes.includes("union") ? "union" : desc.modes[0];
    this.modeSelect.value = this.mode;

    this.timeSlider.min = "0";
    this.timeSlider.max = String(desc.frames - 1);
    this.timeSlider.value = "0";

    const centroid = this.simplexCentroid(0);
    this.current = clampToHull(centroid, desc);

    this.map.addEventListener("pointerdown", (ev) => {
      this.dragging = true;
      this.map.setPointerCapture(ev.pointerId);
      this.onDrag(ev);
    });
    this.map.addEventListener("pointermove", (ev) => {
      if (this.dragging) this.onDrag(ev);
    });
    this.map.addEventListener("pointerup", () => (this.dragging = false));
    this.timeSlider.addEventListener("input", () => {
      this.frame = Number(this.timeSlider.value);
      this.refresh();
    });
    this.modeSelect.addEventListener("change", () => {
      this.mode = this.modeSelect.value;
      this.refresh();
    });
    this.compareToggle.addEventListener("change", () => {
      this.compare = this.compareToggle.checked;
      this.refsBox.classList.toggle("hidden", !this.compare);
      this.refresh();
    });

    this.drawMap();
    this.refresh();
  }

  private simplexCentroid(index: number): number[] {
    const verts = this.space.simplices[index].map((i) => embed(this.space.samples[i].r));
    return verts[0].map(
      (_, axis) => verts.reduce((s, v) => s + v[axis], 0) / verts.length
    );
  }

  private onDrag(ev: PointerEvent): void {
    const rect = this.map.getBoundingClientRect();
    const xy: [number, number] = [
      ((ev.clientX - rect.left) / rect.width) * this.map.width,
      ((ev.clientY - rect.top) / rect.height) * this.map.height,
    ];
    this.current = clampToHull(this.layout.fromCanvas(xy), this.space);
    this.drawMap();
    this.refresh();
  }

  private refresh(): void {
    this.timeOut.textContent = String(this.frame);
    const coords = requestCoordinates(this.current, this.space);
    const url = buildFrameUrl("", coords, this.frame, this.mode);
    this.requester.schedule(
      url,
      (result) => {
        this.clearError();
        const old = this.image.src;
        this.image.src = URL.createObjectURL(result.blob);
        if (old.startsWith("blob:")) URL.revokeObjectURL(old);
        const pairs = result.labels.map(
          (label, i) => `${label}=${result.weights[i].toFixed(3)}`
        );
        this.weightsOut.textContent = pairs.join("  ");
        const snapped = snapVertex(this.current.point, this.space, VERTEX_SNAP_RADIUS);
        this.statusOut.textContent =
          snapped !== null
            ? `input: ${this.space.samples[snapped].name}`
            : `simplex ${result.simplex} · ${result.mode}`;
      },
      (message) => this.showError(message)
    );
    if (this.compare) this.refreshReferences();
  }

  private refreshReferences(): void {
    const simplex = this.space.simplices[this.current.simplex];
    const ranked = simplex
      .map((sampleIndex, position) => ({
        sampleIndex,
        weight: this.current.weights[position],
      }))
      .sort((a, b) => b.weight - a.weight)
      .slice(0, 3);
    this.refsBox.innerHTML = "";
    for (const { sampleIndex, weight } of ranked) {
      const pane = document.createElement("figure");
      pane.className = "ref-pane";
      const img = document.createElement("img");
      const caption = document.createElement("figcaption");
      caption.textContent = `${this.space.samples[sampleIndex].name} · w=${weight.toFixed(3)}`;
      pane.append(img, caption);
      this.refsBox.appendChild(pane);
      let requester = this.refRequesters.get(sampleIndex);
      if (!requester) {
        requester = new FrameRequester();
        this.refRequesters.set(sampleIndex, requester);
      }
      const url = buildFrameUrl(
        "",
        this.space.samples[sampleIndex].r,
        this.frame,
        this.mode
      );
      requester.schedule(
        url,
        (result) => {
          img.src = URL.createObjectURL(result.blob);
        },
        (message) => this.showError(message)
      );
    }
  }

  private drawMap(): void {
    const ctx = this.map.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.map.width, this.map.height);
    ctx.strokeStyle = "#4d6f8f";
    ctx.fillStyle = "#1d2935";
    ctx.lineWidth = 1.5;
    for (const simplex of this.space.simplices) {
      const pts = simplex.map((i) => this.layout.toCanvas(embed(this.space.samples[i].r)));
      ctx.beginPath();
      ctx.moveTo(pts[0][0], pts[0][1]);
      for (const p of pts.slice(1)) ctx.lineTo(p[0], p[1]);
      if (pts.length > 2) ctx.closePath();
      if (pts.length > 2) ctx.fill();
      ctx.stroke();
    }
    ctx.fillStyle = "#9fc2e0";
    ctx.font = "12px sans-serif";
    this.space.samples.forEach((s, i) => {
      const [x, y] = this.layout.toCanvas(embed(s.r));
      ctx.beginPath();
      ctx.arc(x, y, 5, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillText(s.name, x + 8, y - 8);
    });
    const [cx, cy] = this.layout.toCanvas(this.current.point);
    ctx.fillStyle = "#ffb454";
    ctx.beginPath();
    ctx.arc(cx, cy, 7, 0, 2 * Math.PI);
    ctx.fill();
  }

  private showError(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove("hidden");
  }

  private clearError(): void {
    this.banner.classList.add("hidden");
  }
}

new Explorer().start();
