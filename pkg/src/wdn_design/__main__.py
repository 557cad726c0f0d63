from wdn_design.main import run

run()
