/**
 * DOM wiring for the review console. State lives in the store; the page is a
 * projection of gateway responses and every mutation is a POST through the
 * ApiClient, after which the view reloads from the server.
 */

import { ApiClient, ConflictError, NotFoundError } from "./api.js";
import { heatmapColors } from "./heatmap.js";
import type { Criterion } from "./types.js";
import type { CellView, CriterionView, StatementView } from "./view.js";
import { buildStatementView, validateDetermination } from "./view.js";

const REVIEWER_KEY = "msalens-reviewer";

function element<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ReviewApp {
  private view: StatementView | null = null;
  private activeCriterion: Criterion = "Approval";

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  reviewerId(): string {
    let id = window.localStorage.getItem(REVIEWER_KEY);
    if (!id) {
      id = window.prompt("Reviewer id?") || "anonymous";
      window.localStorage.setItem(REVIEWER_KEY, id);
    }
    return id;
  }

  async start(): Promise<void> {
    const statementId = new URLSearchParams(window.location.search).get("statement");
    if (statementId) {
      await this.loadStatement(statementId);
    } else {
      await this.loadList();
    }
  }

  async loadList(): Promise<void> {
    const { statements } = await this.api.listStatements();
    this.root.replaceChildren();
    const heading = element("h1", "", "Statements");
    this.root.appendChild(heading);
    const list = element("ul", "statement-list");
    for (const summary of statements) {
      const item = element("li");
      const link = element("a", "", `${summary.id} (${summary.sentence_count} sentences)`);
      link.setAttribute("href", `?statement=${encodeURIComponent(summary.id)}`);
      item.appendChild(link);
      item.appendChild(
        element(
          "span",
          "meta",
          ` ${summary.metadata.jurisdiction} · ${summary.metadata.sector} · ${summary.metadata.publication_year}`,
        ),
      );
      list.appendChild(item);
    }
    if (statements.length === 0) {
      list.appendChild(element("li", "", "No statements in the store."));
    }
    this.root.appendChild(list);
  }

  async loadStatement(statementId: string): Promise<void> {
    try {
      const detail = await this.api.getStatement(statementId);
      this.view = buildStatementView(detail);
    } catch (error) {
      if (error instanceof NotFoundError) {
        this.root.replaceChildren(element("p", "error", `Statement not found: ${statementId}`));
        return;
      }
      throw error;
    }
    this.render();
  }

  private render(): void {
    if (!this.view) return;
    const view = this.view;
    this.root.replaceChildren();

    this.root.appendChild(element("h1", "", `Statement ${view.statementId}`));

    const progress = element("div", "progress");
    const done = view.progress.relevant
      ? Math.round((100 * view.progress.reviewed) / view.progress.relevant)
      : 0;
    progress.appendChild(
      element("span", "", `Reviewed ${view.progress.reviewed} / ${view.progress.relevant} relevant cells (${done}%)`),
    );
    const bar = element("div", "progress-bar");
    const fill = element("div", "progress-fill");
    fill.style.width = `${done}%`;
    bar.appendChild(fill);
    progress.appendChild(bar);
    this.root.appendChild(progress);

    const tabs = element("nav", "tabs");
    for (const criterionView of view.criteria) {
      const tab = element(
        "button",
        criterionView.criterion === this.activeCriterion ? "tab active" : "tab",
        `${criterionView.criterion} (${criterionView.relevantCount})`,
      );
      tab.addEventListener("click", () => {
        this.activeCriterion = criterionView.criterion;
        this.render();
      });
      tabs.appendChild(tab);
    }
    this.root.appendChild(tabs);

    const active = view.criteria.find((c) => c.criterion === this.activeCriterion);
    if (active) {
      this.root.appendChild(this.renderCriterion(view, active));
    }
  }

  private renderCriterion(view: StatementView, criterionView: CriterionView): HTMLElement {
    const container = element("section", "criterion");
    for (const sentence of view.sentences) {
      const cell = criterionView.cells[sentence.index];
      container.appendChild(this.renderSentence(sentence.text, cell));
    }
    container.appendChild(this.renderDeterminationForm(criterionView));
    return container;
  }

  private renderSentence(text: string, cell: CellView): HTMLElement {
    const row = element("div", cell.relevant ? "sentence relevant" : "sentence");
    const body = element("span", "text");
    if (cell.attribution) {
      const colors = heatmapColors(cell.attribution.phi);
      cell.attribution.tokens.forEach((token, i) => {
        const span = element("span", "token", `${token} `);
        span.style.backgroundColor = colors[i];
        span.title = `phi=${cell.attribution!.phi[i]}`;
        body.appendChild(span);
      });
    } else {
      body.textContent = text;
    }
    if (cell.latestVerdict === "OverrideIrrelevant") {
      body.classList.add("struck");
    }
    row.appendChild(body);

    const side = element("span", "cell-meta");
    if (cell.probability !== null) {
      side.appendChild(element("span", "prob", ` p=${cell.probability.toFixed(3)}`));
    }
    if (cell.predictionError) {
      side.appendChild(element("span", "error", ` [${cell.predictionError}]`));
    }
    if (cell.badge) {
      side.appendChild(element("span", `badge badge-${cell.badge.toLowerCase()}`, cell.badge));
    }
    if (cell.latestVerdict) {
      side.appendChild(element("span", "verdict", ` ${cell.latestVerdict} (rev ${cell.revision})`));
    }
    if (cell.relevant || cell.effectiveRelevant) {
      for (const verdict of ["Accept", "OverrideRelevant", "OverrideIrrelevant"] as const) {
        const button = element("button", "verdict-button", verdict);
        button.addEventListener("click", () => void this.submitDecision(cell, verdict));
        side.appendChild(button);
      }
    }
    row.appendChild(side);
    return row;
  }

  async submitDecision(cell: CellView, verdict: CellView["latestVerdict"] & string): Promise<void> {
    if (!this.view) return;
    try {
      await this.api.submitReview({
        statement_id: this.view.statementId,
        sentence_index: cell.sentenceIndex,
        criterion: cell.criterion,
        verdict,
        reviewer_id: this.reviewerId(),
        expected_revision: cell.revision,
      });
    } catch (error) {
      if (error instanceof ConflictError) {
        window.alert("Another reviewer updated this cell; reloading the latest state.");
        await this.loadStatement(this.view.statementId);
        return;
      }
      throw error;
    }
    await this.loadStatement(this.view.statementId);
  }

  private renderDeterminationForm(criterionView: CriterionView): HTMLElement {
    const form = element("div", "determination");
    form.appendChild(element("h2", "", `Determination for ${criterionView.criterion}`));
    if (criterionView.determination) {
      form.appendChild(
        element(
          "p",
          "current",
          `Current: ${criterionView.determination.decision} citing [${criterionView.determination.cited_sentences.join(", ")}]`,
        ),
      );
    }
    const citedInput = element("input") as HTMLInputElement;
    citedInput.placeholder = "cited sentence indices, e.g. 0,3";
    form.appendChild(citedInput);
    for (const decision of ["Met", "NotMet", "Unclear"] as const) {
      const button = element("button", "determination-button", decision);
      button.addEventListener("click", () => {
        const cited = citedInput.value
          .split(",")
          .map((part) => part.trim())
          .filter((part) => part.length > 0)
          .map((part) => Number(part));
        void this.submitDetermination(criterionView, decision, cited);
      });
      form.appendChild(button);
    }
    return form;
  }

  async submitDetermination(
    criterionView: CriterionView,
    decision: "Met" | "NotMet" | "Unclear",
    citedSentences: number[],
  ): Promise<void> {
    if (!this.view) return;
    const blocked = validateDetermination(decision, citedSentences, criterionView);
    if (blocked) {
      window.alert(blocked);
      return;
    }
    await this.api.submitDetermination({
      statement_id: this.view.statementId,
      criterion: criterionView.criterion,
      decision,
      cited_sentences: citedSentences,
      reviewer_id: this.reviewerId(),
    });
    await this.loadStatement(this.view.statementId);
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const api = new ApiClient(window.location.origin);
  const app = new ReviewApp(api, root);
  void app.start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount();
}
