import { ApiClient } from "./api.js";
import { tintColor } from "./heat.js";
import { ChatController, ViewState } from "./state.js";

const controller = new ChatController(new ApiClient());

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function render(state: ViewState): void {
  const transcript = el<HTMLDivElement>("transcript");
  transcript.replaceChildren(
    ...state.transcript.map((entry) => {
      const bubble = document.createElement("div");
      bubble.className = `bubble ${entry.role}`;
      bubble.textContent = entry.text;
      return bubble;
    }),
  );

  const badge = el<HTMLSpanElement>("decision-badge");
  badge.textContent = state.decisionBadge ?? "";
  badge.style.display = state.decisionBadge ? "inline-block" : "none";

  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = state.errorBanner ?? "";
  banner.style.display = state.errorBanner ? "block" : "none";

  el<HTMLButtonElement>("answer-yes").disabled = !state.buttonsEnabled;
  el<HTMLButtonElement>("answer-no").disabled = !state.buttonsEnabled;
  el<HTMLDivElement>("answer-row").style.display = state.started ? "flex" : "none";

  const heat = el<HTMLDivElement>("heat");
  heat.replaceChildren(
    ...state.heat.map((unit) => {
      const row = document.createElement("div");
      row.className = "unit";
      row.style.background = tintColor(unit.tint);
      const text = document.createElement("span");
      text.textContent = unit.text;
      const bar = document.createElement("span");
      bar.className = "attention-bar";
      bar.style.width = `${Math.round(unit.attention * 120)}px`;
      bar.title = `attention ${unit.attention.toFixed(3)}`;
      row.append(bar, text);
      return row;
    }),
  );

  transcript.scrollTop = transcript.scrollHeight;
}

async function onStart(): Promise<void> {
  const documentText = el<HTMLTextAreaElement>("document-input").value;
  const question = el<HTMLInputElement>("question-input").value;
  const scenario = el<HTMLTextAreaElement>("scenario-input").value;
  if (!documentText.trim() || !question.trim()) {
    return;
  }
  render(await controller.start(documentText, question, scenario));
}

async function onAnswer(answer: "YES" | "NO"): Promise<void> {
  render(await controller.answer(answer));
}

el<HTMLButtonElement>("start-button").addEventListener("click", () => void onStart());
el<HTMLButtonElement>("answer-yes").addEventListener("click", () => void onAnswer("YES"));
el<HTMLButtonElement>("answer-no").addEventListener("click", () => void onAnswer("NO"));
render(controller.state());
