// Polling with an explicit staleness signal: the banner state and the
// last successful fetch time are always shown, never silently stale.

export interface PollState {
  reachable: boolean;
  lastFetch: Date | null;
  lastError: string | null;
}

export function initialPollState(): PollState {
  return { reachable: true, lastFetch: null, lastError: null };
}

export function afterSuccess(state: PollState, now: Date): PollState {
  return { reachable: true, lastFetch: now, lastError: null };
}

export function afterFailure(state: PollState, error: string): PollState {
  return { ...state, reachable: false, lastError: error };
}

export function renderBanner(state: PollState): string {
  if (!state.reachable) {
    return `<div class="banner error">Service unreachable: ${state.lastError ?? 'unknown error'}. Showing data fetched at ${
      state.lastFetch ? state.lastFetch.toISOString() : 'never'
    }.</div>`;
  }
  return `<div class="banner ok">Last fetched ${
    state.lastFetch ? state.lastFetch.toISOString() : 'never'
  }.</div>`;
}

export function startPolling(
  tick: () => Promise<void>,
  intervalMs = 5000,
): () => void {
  let stopped = false;
  let timer: ReturnType<typeof setTimeout> | null = null;
  const loop = async () => {
    if (stopped) return;
    try {
      await tick();
    } finally {
      if (!stopped) timer = setTimeout(loop, intervalMs);
    }
  };
  void loop();
  return () => {
    stopped = true;
    if (timer !== null) clearTimeout(timer);
  };
}
