import { GatewayClient } from "./api.js";
import { createConsole } from "./app.js";

const params = new URLSearchParams(window.location.search);
const gatewayUrl = params.get("gateway") ?? "http://127.0.0.1:8425";

const root = document.getElementById("console");
if (!root) throw new Error("missing #console mount point");

createConsole(root, new GatewayClient(gatewayUrl));
