import { setupApp } from "./app.js";

document.addEventListener("DOMContentLoaded", () => {
  setupApp();
});
