/**
 * Multi-handset page: each pane is one virtual phone talking to the
 * gateway. Settings (gateway URL, poll interval) apply to newly added
 * handsets; panes work independently so siblings can play side by side.
 */

import { Handset } from "./handset.js";

const panesHost = document.getElementById("panes") as HTMLDivElement;
const baseUrlInput = document.getElementById("base-url") as HTMLInputElement;
const pollMsInput = document.getElementById("poll-ms") as HTMLInputElement;
const phoneInput = document.getElementById("new-phone") as HTMLInputElement;
const addButton = document.getElementById("add-handset") as HTMLButtonElement;

let paneCount = 0;

function render(handset: Handset, thread: HTMLDivElement): void {
  thread.replaceChildren();
  for (const message of handset.thread) {
    const bubble = document.createElement("div");
    bubble.className = `bubble ${message.direction}`;
    bubble.textContent = message.text;
    bubble.title = new Date(message.ts).toLocaleTimeString();
    thread.appendChild(bubble);
  }
  thread.scrollTop = thread.scrollHeight;
}

function addHandset(phone: string): void {
  if (!phone) return;
  paneCount++;
  const pane = document.createElement("section");
  pane.className = "pane";
  pane.innerHTML = `
    <header>
      <span class="phone">${phone}</span>
      <button class="close" title="close handset">x</button>
    </header>
    <div class="thread"></div>
    <form class="composer">
      <input type="text" placeholder="type an SMS (try START)" autocomplete="off">
      <button type="submit">send</button>
    </form>`;
  panesHost.appendChild(pane);

  const handset = new Handset({
    baseUrl: baseUrlInput.value,
    phone,
    pollIntervalMs: Number(pollMsInput.value) || 1000,
    storage: window.sessionStorage,
  });
  const thread = pane.querySelector(".thread") as HTMLDivElement;
  handset.onChange = () => render(handset, thread);
  render(handset, thread);
  handset.startPolling();

  const form = pane.querySelector(".composer") as HTMLFormElement;
  const input = form.querySelector("input") as HTMLInputElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    input.value = "";
    void handset.send(text).then(() => handset.poll());
  });
  (pane.querySelector(".close") as HTMLButtonElement).addEventListener(
    "click",
    () => {
      handset.stopPolling();
      pane.remove();
      rememberPhones();
    },
  );
  input.focus();
  rememberPhones();
}

function rememberPhones(): void {
  const phones = [...panesHost.querySelectorAll(".phone")].map(
    (el) => el.textContent ?? "",
  );
  window.sessionStorage.setItem("smsquiz-handset:phones", JSON.stringify(phones));
}

addButton.addEventListener("click", () => {
  addHandset(phoneInput.value.trim());
  phoneInput.value = "";
});
phoneInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter") {
    addHandset(phoneInput.value.trim());
    phoneInput.value = "";
  }
});

// a reload brings every open handset back and rebuilds threads from seq 0
const remembered = window.sessionStorage.getItem("smsquiz-handset:phones");
if (remembered) {
  try {
    for (const phone of JSON.parse(remembered) as string[]) {
      addHandset(phone);
    }
  } catch {
    // ignore corrupt entry
  }
}
