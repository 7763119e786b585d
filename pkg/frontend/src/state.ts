/** Transcript state machine driving the console.
 *
 * Every number shown in the UI comes straight from an API payload; this
 * module never recomputes a score. The transcript survives any single
 * failed request: errors land in `banner` and nothing else changes.
 */

import { ApiClient, ApiError, ResultCard, TurnPayload } from "./api.js";

export interface UiTurnView {
  userText: string;
  inferredQuery: string;
  cards: ResultCard[]; // order matches the API payload order
  refProductId?: string;
}

export interface ComparisonRow {
  withTtr: ResultCard | null;
  withoutTtr: ResultCard | null;
}

export interface ComparisonView {
  rows: ComparisonRow[];
  movement: Map<string, number>; // product_id -> rank(without) - rank(with)
  identical: boolean;
  partial: boolean; // replay failed part-way through
  warning?: string;
}

export interface ConsoleState {
  sessionId: string | null;
  ttrEnabled: boolean;
  turns: UiTurnView[];
  selectedReference: string | null;
  banner: string | null;
  pending: boolean;
  comparison: ComparisonView | null;
}

export function initialState(): ConsoleState {
  return {
    sessionId: null,
    ttrEnabled: true,
    turns: [],
    selectedReference: null,
    banner: null,
    pending: false,
    comparison: null,
  };
}

function describeError(err: unknown): string {
  const apiErr = err as Partial<ApiError>;
  if (apiErr && apiErr.code && apiErr.message) {
    return `${apiErr.code}: ${apiErr.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}

export class ConsoleController {
  state: ConsoleState = initialState();
  private listeners: Array<(state: ConsoleState) => void> = [];

  constructor(private readonly client: ApiClient) {}

  onChange(listener: (state: ConsoleState) => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private set(patch: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...patch };
    this.notify();
  }

  async start(ttrEnabled = true): Promise<void> {
    this.set({ pending: true, banner: null });
    try {
      const session = await this.client.createSession({ ttr_enabled: ttrEnabled });
      this.set({
        sessionId: session.session_id,
        ttrEnabled: session.config.ttr.enabled,
        turns: [],
        selectedReference: null,
        comparison: null,
        pending: false,
      });
    } catch (err) {
      this.set({ pending: false, banner: describeError(err) });
    }
  }

  /** Send one turn; the selected reference card rides along as ref_product_id. */
  async submitTurn(text: string): Promise<TurnPayload | null> {
    if (!this.state.sessionId || this.state.pending || !text.trim()) return null;
    const ref = this.state.selectedReference ?? undefined;
    this.set({ pending: true, banner: null });
    try {
      const payload = await this.client.postTurn(this.state.sessionId, text, ref);
      const view: UiTurnView = {
        userText: payload.user_text,
        inferredQuery: payload.inferred_query,
        cards: payload.results,
        refProductId: ref,
      };
      this.set({
        turns: [...this.state.turns, view],
        selectedReference: null,
        comparison: null,
        pending: false,
      });
      return payload;
    } catch (err) {
      const apiErr = err as Partial<ApiError>;
      const expired = apiErr.status === 404;
      this.set({
        pending: false,
        banner: expired
          ? `${describeError(err)} (session expired; start a new session to continue)`
          : describeError(err),
      });
      return null;
    }
  }

  selectReference(productId: string): void {
    this.set({
      selectedReference: this.state.selectedReference === productId ? null : productId,
    });
  }

  dismissBanner(): void {
    this.set({ banner: null });
  }

  get canCompare(): boolean {
    return this.state.turns.length > 0 && !this.state.pending;
  }

  /** Replay the transcript into a twin session with the TTR flag flipped
   * and pair the latest turn's rankings side by side. */
  async toggleTtr(): Promise<void> {
    if (!this.canCompare) return;
    this.set({ pending: true, banner: null });
    const mine = this.state.turns;
    const replayed: TurnPayload[] = [];
    let warning: string | undefined;
    try {
      const twin = await this.client.createSession({ ttr_enabled: !this.state.ttrEnabled });
      for (const turn of mine) {
        replayed.push(
          await this.client.postTurn(twin.session_id, turn.userText, turn.refProductId),
        );
      }
    } catch (err) {
      warning = `replay incomplete: ${describeError(err)}`;
    }
    const twinLast = replayed.length === mine.length ? replayed[replayed.length - 1] : null;
    const comparison = buildComparison(
      mine[mine.length - 1].cards,
      twinLast ? twinLast.results : null,
      this.state.ttrEnabled,
      warning,
    );
    this.set({ pending: false, comparison });
  }
}

export function buildComparison(
  current: ResultCard[],
  twin: ResultCard[] | null,
  currentIsTtr: boolean,
  warning?: string,
): ComparisonView {
  const withTtr = currentIsTtr ? current : twin ?? [];
  const withoutTtr = currentIsTtr ? twin ?? [] : current;
  const rows: ComparisonRow[] = [];
  const n = Math.max(withTtr.length, withoutTtr.length);
  for (let i = 0; i < n; i++) {
    rows.push({ withTtr: withTtr[i] ?? null, withoutTtr: withoutTtr[i] ?? null });
  }
  const movement = new Map<string, number>();
  for (const card of withTtr) {
    const before = withoutTtr.find((c) => c.product_id === card.product_id);
    if (before) movement.set(card.product_id, before.rank - card.rank);
  }
  const identical =
    twin !== null &&
    withTtr.length === withoutTtr.length &&
    withTtr.every((card, i) => card.product_id === withoutTtr[i].product_id);
  return { rows, movement, identical, partial: twin === null, warning };
}
