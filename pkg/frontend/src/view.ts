import type { DisplayPayload, PendingQueryDoc, StatusDoc } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderPayload(payload: DisplayPayload, instanceId: string): HTMLElement {
  if (payload.kind === "asset") {
    const frame = el("div", "query-asset");
    const img = el("img");
    img.src = payload.ref;
    img.alt = `instance ${instanceId}`;
    img.onerror = () => {
      // Asset failed to load; keep the item labelable with a placeholder.
      frame.replaceChildren(el("div", "asset-placeholder", `instance ${instanceId}`));
    };
    frame.append(img);
    return frame;
  }
  const summary = el("div", "query-features");
  summary.append(el("div", "feature-line", `instance ${instanceId}`));
  summary.append(el("div", "feature-line", `dimensions: ${payload.dimensionality}`));
  summary.append(el("div", "feature-line", `norm: ${payload.norm}`));
  summary.append(el("div", "feature-line", `head: [${payload.preview.join(", ")}]`));
  if (payload.tag) {
    summary.append(el("div", "feature-line", `tag: ${payload.tag}`));
  }
  return summary;
}

export interface QueryHandlers {
  onLabel: (classIndex: number) => void;
  onReject: () => void;
}

/** Query card: the item under review, one button per class, and a reject control. */
export function renderQuery(
  root: HTMLElement,
  query: PendingQueryDoc,
  classNames: string[],
  handlers: QueryHandlers,
): void {
  root.replaceChildren();
  const card = el("section", "query-card");
  card.dataset.queryId = query.query_id;
  card.dataset.instanceId = query.instance_id;

  card.append(renderPayload(query.display_payload, query.instance_id));
  card.append(
    el("div", "query-meta", `strategy score ${query.strategy_score.toFixed(4)}`),
  );

  const buttons = el("div", "class-buttons");
  classNames.forEach((name, index) => {
    const button = el("button", "class-button", `${index + 1}. ${name}`);
    button.dataset.classIndex = String(index);
    button.addEventListener("click", () => handlers.onLabel(index));
    buttons.append(button);
  });
  const reject = el("button", "reject-button", "x. reject");
  reject.addEventListener("click", () => handlers.onReject());
  buttons.append(reject);
  card.append(buttons);

  root.append(card);
}

export function renderCompletion(root: HTMLElement): void {
  root.replaceChildren();
  const done = el("section", "completion");
  done.append(el("h2", undefined, "Pool exhausted"));
  done.append(el("p", undefined, "Every instance has been labeled or rejected."));
  root.append(done);
}

export function renderTrainingState(root: HTMLElement): void {
  root.replaceChildren(el("div", "training-banner", "training..."));
}

export function renderProgress(panel: HTMLElement, status: StatusDoc): void {
  panel.replaceChildren();
  const rows: Array<[string, string]> = [
    ["iteration", String(status.iteration)],
    ["labeled", String(status.labeled_size)],
    ["pool", String(status.pool_size)],
    ["discarded", String(status.discarded)],
    ["strategy", status.strategy],
  ];
  if (status.test_accuracy !== null) {
    rows.push(["test accuracy", status.test_accuracy.toFixed(3)]);
  }
  for (const [name, value] of rows) {
    const row = el("div", "progress-row");
    row.append(el("span", "progress-name", name));
    const valueNode = el("span", "progress-value", value);
    valueNode.dataset.stat = name.replace(" ", "-");
    row.append(valueNode);
    panel.append(row);
  }
}

export function showBanner(root: HTMLElement, message: string, kind: "error" | "info"): void {
  const banner = el("div", `banner banner-${kind}`, message);
  root.prepend(banner);
}

export function clearBanners(root: HTMLElement): void {
  root.querySelectorAll(".banner").forEach((node) => node.remove());
}

export function renderInlineError(root: HTMLElement, message: string): void {
  const card = root.querySelector(".query-card");
  if (card) {
    const existing = card.querySelector(".inline-error");
    if (existing) existing.remove();
    card.append(el("div", "inline-error", message));
  }
}
