"""Convert a WinBUGS data list into the CSV dataset format (counts, covariates, distances, index)."""
import json, re, sys, pathlib

src = pathlib.Path(sys.argv[1]).read_text()
out = pathlib.Path(sys.argv[2]); out.mkdir(parents=True, exist_ok=True)
data = src[src.index("data list("):]

def grab(name, end_pat):
    m = re.search(name + r"\s*=\s*(?:structure\(\.Data=)?c\((.*?)\)" + end_pat, data, re.S)
    body = re.sub(r"#[^#\n]*#", "", m.group(1))
    return [float(v) for v in body.replace("\n", " ").split(",") if v.strip()]

O = [int(v) for v in grab(r"\bO", r"\s*,")]
Y = [int(v) for v in grab(r"\by", r"\s*,")]
X = grab(r"\bx", r",\s*\.Dim")
D = grab(r"\bx10", r",")
S = [int(v) for v in grab(r"startinds", r",")]
E = [int(v) for v in grab(r"endinds", r"\)")]
n = len(O)
assert len(X) == n * 10, len(X)
print(n, sum(O), len(Y), len(D), len(S), len(E))
def fmt(v):
    r = repr(float(v))
    return r[:-2] if r.endswith(".0") else r

names = ["villages_prev_week", "rainfall", "avg_temp", "max_temp", "min_temp",
         "avg_humidity", "spring", "summer", "autumn"]
with open(out / "counts.csv", "w") as f:
    f.write("week,count,year\n")
    for i in range(n):
        f.write(f"{i+1},{O[i]},{Y[i]}\n")
with open(out / "covariates.csv", "w") as f:
    f.write("week," + ",".join(names) + "\n")
    for i in range(n):
        row = X[i*10:(i+1)*10]
        assert row[0] == 1.0
        f.write(f"{i+1}," + ",".join(fmt(v) for v in row[1:]) + "\n")
with open(out / "distances.csv", "w") as f:
    f.write("distance\n")
    for v in D:
        f.write(fmt(v) + "\n")
with open(out / "dist_index.csv", "w") as f:
    f.write("week,start,end\n")
    for i in range(len(S)):
        f.write(f"{i+1},{S[i]},{E[i]}\n")
with open(out / "manifest.json", "w") as f:
    json.dump({"n": n, "p": 9, "years": max(Y), "d_min": 250.0,
               "counts": "counts.csv", "covariates": "covariates.csv",
               "distances": "distances.csv", "dist_index": "dist_index.csv"},
              f, indent=2, sort_keys=True)
    f.write("\n")
