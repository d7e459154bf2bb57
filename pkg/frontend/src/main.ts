import { mountSurveyApp } from "./ui.js";

// Service base URL: ?api=http://host:port, defaulting to the page origin.
const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? window.location.origin;

mountSurveyApp(document.getElementById("app") as HTMLElement, baseUrl);
