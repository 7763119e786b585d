/** DOM rendering. Scores always display with 3 decimals; card order is
 * exactly the payload order. */

import { ResultCard } from "./api.js";
import { ComparisonView, ConsoleState, UiTurnView } from "./state.js";

export interface ViewHandlers {
  onSelectReference: (productId: string) => void;
  onDismissBanner: () => void;
}

export function formatScore(value: number): string {
  return value.toFixed(3);
}

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

export function renderCard(
  card: ResultCard,
  selected: boolean,
  onSelect: (productId: string) => void,
): HTMLElement {
  const root = el("div", `card${selected ? " selected" : ""}`);
  root.dataset.productId = card.product_id;

  const img = el("div", "card-image");
  if (/^https?:\/\//.test(card.image_ref)) {
    const tag = el("img");
    tag.src = card.image_ref;
    tag.alt = card.caption;
    img.appendChild(tag);
  } else {
    img.classList.add("placeholder");
    img.textContent = "no image";
  }
  root.appendChild(img);

  root.appendChild(el("div", "card-rank", `#${card.rank}`));
  root.appendChild(el("div", "card-caption", card.caption));
  root.appendChild(el("div", "card-sid", card.best_sid));
  const scores = el("div", "card-scores");
  scores.appendChild(el("span", "score-raw", `raw ${formatScore(card.rm_raw)}`));
  scores.appendChild(el("span", "score-ttr", `ttr ${formatScore(card.rm_ttr)}`));
  root.appendChild(scores);

  root.addEventListener("click", () => onSelect(card.product_id));
  return root;
}

export function renderTurn(
  turn: UiTurnView,
  selectedReference: string | null,
  handlers: ViewHandlers,
): HTMLElement {
  const root = el("section", "turn");
  const user = el("div", "user-text", turn.userText);
  if (turn.refProductId) {
    user.appendChild(el("span", "ref-chip", `ref: ${turn.refProductId}`));
  }
  root.appendChild(user);
  root.appendChild(el("div", "inferred-query", `inferred: ${turn.inferredQuery}`));
  const cards = el("div", "cards");
  for (const card of turn.cards) {
    cards.appendChild(
      renderCard(card, card.product_id === selectedReference, handlers.onSelectReference),
    );
  }
  root.appendChild(cards);
  return root;
}

export function renderComparison(view: ComparisonView): HTMLElement {
  const root = el("section", "comparison");
  root.appendChild(el("h3", undefined, "TTR on vs off (latest turn)"));
  if (view.warning) {
    root.appendChild(el("div", "comparison-warning", view.warning));
  }
  if (view.identical) {
    root.appendChild(el("div", "comparison-identical", "no change"));
  }
  const table = el("table", "comparison-table");
  const head = el("tr");
  head.appendChild(el("th", undefined, "with TTR"));
  head.appendChild(el("th", undefined, "without TTR"));
  table.appendChild(head);
  for (const row of view.rows) {
    const tr = el("tr", "comparison-row");
    for (const side of [row.withTtr, row.withoutTtr]) {
      const td = el("td");
      if (side) {
        const move = view.movement.get(side.product_id) ?? 0;
        const arrow = move > 0 ? ` (up ${move})` : move < 0 ? ` (down ${-move})` : "";
        td.textContent = `#${side.rank} ${side.product_id} ${formatScore(
          side.rm_ttr,
        )}${arrow}`;
        td.dataset.productId = side.product_id;
      }
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  root.appendChild(table);
  return root;
}

export function render(
  container: HTMLElement,
  state: ConsoleState,
  handlers: ViewHandlers,
): void {
  container.replaceChildren();

  if (state.banner) {
    const banner = el("div", "banner", state.banner);
    const dismiss = el("button", "banner-dismiss", "dismiss");
    dismiss.addEventListener("click", handlers.onDismissBanner);
    banner.appendChild(dismiss);
    container.appendChild(banner);
  }

  const transcript = el("div", "transcript");
  for (const turn of state.turns) {
    transcript.appendChild(renderTurn(turn, state.selectedReference, handlers));
  }
  container.appendChild(transcript);

  if (state.comparison) {
    container.appendChild(renderComparison(state.comparison));
  }
}
