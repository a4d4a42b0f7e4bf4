// Deployment configuration: a single config.json next to index.html names
// the service and the experiment. Flags never come from code.

export interface ClientConfig {
  base_url: string;
  experiment_id: string;
}

export async function loadConfig(url = "./config.json"): Promise<ClientConfig> {
  const response = await fetch(url, { cache: "no-store" });
  if (!response.ok) {
    throw new Error(`cannot load ${url}: HTTP ${response.status}`);
  }
  const raw = (await response.json()) as Partial<ClientConfig>;
  if (typeof raw.base_url !== "string" || !raw.base_url) {
    throw new Error("config.json is missing base_url");
  }
  if (typeof raw.experiment_id !== "string" || !raw.experiment_id) {
    throw new Error("config.json is missing experiment_id");
  }
  return { base_url: raw.base_url, experiment_id: raw.experiment_id };
}
