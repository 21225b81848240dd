import { describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api.js";
import { FakeService, makeSentences } from "./fake_service.js";

function makeClient() {
  const service = new FakeService(makeSentences(5));
  return { service, client: new Client("", service.fetch) };
}

describe("api client", () => {
  it("fetches the hierarchy", async () => {
    const { client } = makeClient();
    const hierarchy = await client.getHierarchy();
    expect(hierarchy.top_level).toEqual(["vascular"]);
    expect(hierarchy.nodes.map((n) => n.id)).toContain("stroke");
  });

  it("builds report query strings", async () => {
    const { service, client } = makeClient();
    const before = await client.getReports("p1", { before: 100 });
    expect(before.map((r) => r.id)).toEqual(["r1"]);
    const after = await client.getReports("p1", { after: 100 });
    expect(after.map((r) => r.id)).toEqual(["r2"]);
    expect(service.requests.map((r) => r.path)).toEqual([
      "/patients/p1/reports?before=100",
      "/patients/p1/reports?after=100",
    ]);
  });

  it("passes the blind flag through to the service", async () => {
    const { service, client } = makeClient();
    const open = await client.rank({
      patient_id: "p1", time_point: 100, query: { category_id: "stroke" },
      model: "description", top_k: 3,
    });
    expect(open.model).toBe("description");
    const blind = await client.rank({
      patient_id: "p1", time_point: 100, query: { category_id: "stroke" },
      model: "description", top_k: 3, blind: true,
    });
    expect(blind.model).toBeUndefined();
    expect(blind.probability).toBeUndefined();
    expect(service.requests.at(-1)?.body).toMatchObject({ blind: true });
  });

  it("surfaces service errors as ApiError with detail", async () => {
    const { client } = makeClient();
    await client.addCustomCategory("Twice", "d");
    await expect(client.addCustomCategory("Twice", "d")).rejects.toThrowError(
      ApiError,
    );
    await expect(client.addCustomCategory("Twice", "d")).rejects.toMatchObject({
      status: 409,
    });
  });

  it("round-trips annotations with round filtering", async () => {
    const { client } = makeClient();
    await client.postAnnotation({
      annotator: "a1", patient_id: "p1", time_point: 100, query: "stroke",
      fingerprint: "sentence number 0 about the patient.",
      relevant: true, round: "validation",
    });
    expect(await client.getAnnotations("validation")).toHaveLength(1);
    expect(await client.getAnnotations("reference")).toHaveLength(0);
  });
});
