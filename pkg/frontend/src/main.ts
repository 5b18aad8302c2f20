import { ApiClient } from "./api.js";
import { AnnotationApp } from "./app.js";

function required(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id} in index.html`);
  }
  return node;
}

const app = new AnnotationApp(new ApiClient(""), {
  query: required("query"),
  progress: required("progress"),
  chart: required("chart"),
  banners: required("banners"),
});

document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement) {
    return;
  }
  app.handleKey(event.key);
});

void app.start();
