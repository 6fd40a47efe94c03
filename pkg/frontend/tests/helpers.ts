import type { StudyDocument } from "../src/model.js";

/** Minimal two-hop study shaped like GET /api/study. */
export function makeStudy(): StudyDocument {
  return {
    study_id: "test-study",
    scale_min: 0,
    scale_max: 100,
    hops: [
      { hop_id: "A01", name: "overcome client lockdown", kind: "attack" },
      { hop_id: "V01", name: "bypass the proxy", kind: "evade" },
    ],
    questions: {
      attack: {
        c: "How much technical capability does it need?",
        t: "How much time would it take?",
        f: "How often is it attempted?",
        a: "How available are the tools?",
        d: "How inherently difficult is this type of attack?",
        r: "How much interaction does it require?",
        g: "How mature is the technique?",
        o: "Overall, how difficult is this hop?",
      },
      evade: {
        c: "How much technical capability does it need?",
        a: "How available are the tools?",
        r: "How much interaction does it require?",
        o: "Overall, how difficult is this hop?",
      },
    },
  };
}
