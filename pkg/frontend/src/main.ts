import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const stored = window.localStorage.getItem("fundwatch-token") ?? "";
const token = params.get("token") ?? stored;
if (token) window.localStorage.setItem("fundwatch-token", token);

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const api = new ApiClient("", token);
const app = createApp(root, api);
void app.start();
