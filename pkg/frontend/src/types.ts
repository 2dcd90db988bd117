import { z } from "zod";

/** Wire schema of a session as served by the dialogue API.  Strict: any
 * unexpected or missing key is a contract violation. */
export const SessionViewSchema = z
  .object({
    session_id: z.string(),
    status: z.enum(["AWAITING_ANSWER", "CLOSED"]),
    decision: z.enum(["IRRELEVANT", "YES", "NO", "MORE"]).nullable(),
    pending_question: z.string().nullable(),
    history: z.array(
      z
        .object({
          follow_up_question: z.string(),
          follow_up_answer: z.enum(["YES", "NO"]),
        })
        .strict(),
    ),
    asked_questions: z.array(z.string()),
    turn_cap: z.number().int(),
    turns_taken: z.number().int(),
    hypotheses: z.array(z.string()),
    attention: z.array(z.number()),
    alignment: z.array(z.array(z.number())),
    probabilities: z.array(z.number()),
  })
  .strict();

export type SessionView = z.infer<typeof SessionViewSchema>;

export type Answer = "YES" | "NO";
