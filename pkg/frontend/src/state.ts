// View state and its transitions, kept pure so they are trivially testable.
// Selections cascade: changing the run clears granularity-dependent state,
// changing the granularity clears the cluster selection.

export interface ViewState {
  runId: string | null;
  granularity: string;
  selectedCluster: number | null;
  queueAlert: string; // "" = all
  queueDisposition: string; // "" = all
  selectedCase: string | null;
  error: string | null;
}

export const initialState: ViewState = {
  runId: null,
  granularity: "Day",
  selectedCluster: null,
  queueAlert: "",
  queueDisposition: "",
  selectedCase: null,
  error: null,
};

export type Action =
  | { kind: "select-run"; runId: string }
  | { kind: "select-granularity"; granularity: string }
  | { kind: "select-cluster"; cluster: number | null }
  | { kind: "set-queue-filter"; alert?: string; disposition?: string }
  | { kind: "select-case"; caseId: string | null }
  | { kind: "error"; message: string }
  | { kind: "clear-error" };

export function reduce(state: ViewState, action: Action): ViewState {
  switch (action.kind) {
    case "select-run":
      if (action.runId === state.runId) return state;
      return {
        ...initialState,
        runId: action.runId,
        granularity: state.granularity,
      };
    case "select-granularity":
      if (action.granularity === state.granularity) return state;
      return { ...state, granularity: action.granularity, selectedCluster: null };
    case "select-cluster":
      return { ...state, selectedCluster: action.cluster };
    case "set-queue-filter":
      return {
        ...state,
        queueAlert: action.alert ?? state.queueAlert,
        queueDisposition: action.disposition ?? state.queueDisposition,
      };
    case "select-case":
      return { ...state, selectedCase: action.caseId };
    case "error":
      return { ...state, error: action.message };
    case "clear-error":
      return { ...state, error: null };
  }
}
