import { ApiClient, ApiRequestError } from "./api.js";
import { chartValues, renderCurveChart } from "./chart.js";
import type { Choice, PendingQueryDoc } from "./types.js";
import {
  clearBanners,
  renderCompletion,
  renderInlineError,
  renderProgress,
  renderQuery,
  renderTrainingState,
  showBanner,
} from "./view.js";

export interface AppElements {
  query: HTMLElement;
  progress: HTMLElement;
  chart: HTMLElement;
  banners: HTMLElement;
}

export interface AppOptions {
  pollIntervalMs?: number; // 0 disables the status poller (tests drive manually)
}

/**
 * Labeling console controller.
 *
 * Holds no loop truth of its own: every render is reconstructed from the API,
 * so a page reload lands in an identical state. Each user action issues
 * exactly one mutation; repeated clicks while a submission is in flight are
 * dropped.
 */
export class AnnotationApp {
  private classNames: string[] = [];
  private currentQuery: PendingQueryDoc | null = null;
  private submitting = false;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly elements: AppElements,
    private readonly options: AppOptions = {},
  ) {}

  async start(): Promise<void> {
    try {
      this.classNames = await this.client.getClasses();
      await this.refreshProgress();
      await this.loadNextQuery();
      clearBanners(this.elements.banners);
    } catch (error) {
      this.handleTransportFailure(error);
      return;
    }
    const interval = this.options.pollIntervalMs ?? 2000;
    if (interval > 0 && this.pollTimer === null) {
      this.pollTimer = setInterval(() => {
        void this.refreshProgress().catch(() => undefined);
      }, interval);
    }
  }

  stop(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  getCurrentQuery(): PendingQueryDoc | null {
    return this.currentQuery;
  }

  async refreshProgress(): Promise<void> {
    const status = await this.client.getStatus();
    renderProgress(this.elements.progress, status);
    renderCurveChart(this.elements.chart, status.curve);
  }

  async loadNextQuery(): Promise<void> {
    try {
      const query = await this.client.getNext();
      this.currentQuery = query;
      renderQuery(this.elements.query, query, this.classNames, {
        onLabel: (classIndex) => void this.submit({ kind: "label", classIndex }),
        onReject: () => void this.submit({ kind: "reject" }),
      });
    } catch (error) {
      if (error instanceof ApiRequestError && error.status === 410) {
        this.currentQuery = null;
        renderCompletion(this.elements.query);
        await this.refreshProgress();
        return;
      }
      throw error;
    }
  }

  async submit(choice: Choice): Promise<void> {
    if (this.submitting || this.currentQuery === null) {
      return; // debounce: at most one in-flight submission
    }
    const query = this.currentQuery;
    this.submitting = true;
    renderTrainingState(this.elements.query);
    try {
      const ack = await this.client.submitLabel(query.query_id, choice);
      renderProgress(this.elements.progress, ack.status);
      renderCurveChart(this.elements.chart, ack.status.curve);
      this.currentQuery = null;
      await this.loadNextQuery();
      clearBanners(this.elements.banners);
    } catch (error) {
      if (error instanceof ApiRequestError && error.status === 409) {
        this.currentQuery = null;
        await this.loadNextQuery(); // stale query; refetch the real one
      } else if (error instanceof ApiRequestError && error.status === 400) {
        renderQuery(this.elements.query, query, this.classNames, {
          onLabel: (classIndex) => void this.submit({ kind: "label", classIndex }),
          onReject: () => void this.submit({ kind: "reject" }),
        });
        renderInlineError(this.elements.query, error.message);
      } else {
        this.handleTransportFailure(error);
      }
    } finally {
      this.submitting = false;
    }
  }

  handleKey(key: string): void {
    if (this.currentQuery === null) {
      return;
    }
    if (key === "x") {
      void this.submit({ kind: "reject" });
      return;
    }
    const digit = Number.parseInt(key, 10);
    if (Number.isInteger(digit) && digit >= 1 && digit <= this.classNames.length) {
      void this.submit({ kind: "label", classIndex: digit - 1 });
    }
  }

  private handleTransportFailure(error: unknown): void {
    const message = error instanceof Error ? error.message : String(error);
    clearBanners(this.elements.banners);
    showBanner(this.elements.banners, `server unreachable (${message}); retrying...`, "error");
    setTimeout(() => {
      void this.start();
    }, 3000);
  }

  /** Values currently rendered in the chart; used by contract tests. */
  renderedCurve() {
    return chartValues(this.elements.chart);
  }
}
