import { createApp } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("server")
  ?? `${window.location.protocol}//${window.location.host}`;

const app = createApp(document.body, base);
void app.connect();

declare global {
  interface Window { twinConsole: unknown }
}
window.twinConsole = app;
