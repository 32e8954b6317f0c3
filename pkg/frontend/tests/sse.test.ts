import { describe, expect, it } from "vitest";
import { SseParser } from "../src/sse.js";

const STREAM =
  'id: 1\nevent: record\ndata: {"seq": 1}\n\n' +
  ": heartbeat\n\n" +
  'id: 2\nevent: record\ndata: {"seq": 2}\n\n';

describe("sse parser", () => {
  it("parses a complete event", () => {
    const parser = new SseParser();
    const events = parser.feed('id: 7\nevent: record\ndata: {"seq": 7}\n\n');
    expect(events).toEqual([{ id: "7", event: "record", data: '{"seq": 7}' }]);
    expect(parser.lastEventId).toBe("7");
  });

  it("ignores heartbeat comments but keeps surrounding events", () => {
    const parser = new SseParser();
    const events = parser.feed(STREAM);
    expect(events.map((e) => e.id)).toEqual(["1", "2"]);
  });

  it("joins multi-line data with newlines", () => {
    const parser = new SseParser();
    const events = parser.feed("data: one\ndata: two\n\n");
    expect(events[0].data).toBe("one\ntwo");
  });

  it("tolerates CRLF line endings", () => {
    const parser = new SseParser();
    const events = parser.feed("id: 3\r\nevent: record\r\ndata: x\r\n\r\n");
    expect(events).toEqual([{ id: "3", event: "record", data: "x" }]);
  });

  it("treats a field with no colon as a name with empty value", () => {
    const parser = new SseParser();
    const events = parser.feed("data\ndata: tail\n\n");
    expect(events[0].data).toBe("\ntail");
  });

  it("produces identical events regardless of chunk boundaries", () => {
    const whole = new SseParser().feed(STREAM);
    let seed = 12345;
    const rand = (n: number) => {
      seed = (seed * 1103515245 + 12345) & 0x7fffffff;
      return seed % n;
    };
    for (let trial = 0; trial < 200; trial++) {
      const parser = new SseParser();
      const got: unknown[] = [];
      let rest = STREAM;
      while (rest.length > 0) {
        const take = 1 + rand(rest.length);
        got.push(...parser.feed(rest.slice(0, take)));
        rest = rest.slice(take);
      }
      expect(got).toEqual(whole);
    }
  });

  it("keeps the last event id across events that do not set one", () => {
    const parser = new SseParser();
    parser.feed("id: 41\ndata: a\n\n");
    parser.feed("data: b\n\n");
    expect(parser.lastEventId).toBe("41");
  });
});
