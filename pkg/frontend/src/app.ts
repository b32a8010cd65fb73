// Browser entry point: mount onto the #app node the static page ships.

import { mountApp } from "./main.js";

const root = document.getElementById("app");
if (root) {
  mountApp(root);
}
