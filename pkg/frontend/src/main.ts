import { fetchRegistry, simulate } from "./api";
import { mountApp } from "./app";
import "./styles.css";

const root = document.getElementById("app");
if (root) {
  fetchRegistry()
    .then((registry) => {
      mountApp(root, registry, simulate);
    })
    .catch((error) => {
      root.textContent = `Could not reach the simulation API: ${String(error)}`;
    });
}
