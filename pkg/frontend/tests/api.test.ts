import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { StubServer } from "./stub_server.js";

function client(stub: StubServer): ApiClient {
  return new ApiClient("http://stub.test/", stub.fetch);
}

describe("ApiClient", () => {
  it("creates sessions and strips the trailing slash", async () => {
    const stub = new StubServer();
    const session = await client(stub).createSession({ ttr_enabled: false });
    expect(session.session_id).toBe("stub-1");
    expect(session.config.ttr.enabled).toBe(false);
    expect(stub.requests[0].path).toBe("/v1/sessions");
  });

  it("omits ref_product_id unless set", async () => {
    const stub = new StubServer();
    const api = client(stub);
    const session = await api.createSession();
    await api.postTurn(session.session_id, "red dress");
    await api.postTurn(session.session_id, "cheaper", "p2");
    const bodies = stub.requests.filter((r) => r.path.endsWith("/turns")).map((r) => r.body);
    expect("ref_product_id" in bodies[0]).toBe(false);
    expect(bodies[1].ref_product_id).toBe("p2");
  });

  it("surfaces structured error bodies", async () => {
    const stub = new StubServer();
    const api = client(stub);
    let caught: ApiError | null = null;
    try {
      await api.postTurn("ghost", "hello");
    } catch (err) {
      caught = err as ApiError;
    }
    expect(caught?.status).toBe(404);
    expect(caught?.code).toBe("session_not_found");
    expect(caught?.message).toContain("ghost");
  });

  it("reports health", async () => {
    const stub = new StubServer();
    const health = await client(stub).health();
    expect(health.status).toBe("ok");
  });
});
