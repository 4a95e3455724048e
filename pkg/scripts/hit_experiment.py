import json
import sys
import time
import http.client


def request(conn, method, path, payload=None):
    body = json.dumps(payload) if payload is not None else None
    headers = {"Content-Type": "application/json"}
    conn.request(method, path, body=body, headers=headers)
    resp = conn.getresponse()
    return resp.status, json.loads(resp.read().decode("utf-8", errors="ignore") or "null")


def main():
    payload = {
        "benchmark": "toy",
        "modes": ["gaussian_kernel", "max_of_variance"],
        "pool_size": 20000,
        "runs": 2,
        "master_seed": 11,
        "output_dir": "results/api",
    }

    conn = http.client.HTTPConnection("localhost", 8000)
    status, job = request(conn, "POST", "/api/v1/experiments", payload)
    print("STATUS:", status)
    if not 200 <= status < 300:
        print(json.dumps(job, indent=2))
        return 1

    job_id = job["job_id"]
    while True:
        status, view = request(conn, "GET", f"/api/v1/experiments/{job_id}")
        state = view["job"]["status"]
        print("JOB:", state)
        if state in ("completed", "failed"):
            break
        time.sleep(2)

    print("BODY:")
    print(json.dumps(view, indent=2))
    return 0 if state == "completed" else 1


if __name__ == "__main__":
    sys.exit(main())
